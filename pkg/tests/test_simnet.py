import numpy as np
import pytest

from securedfl.aggregate import ALL_TO_ALL, GROUPED, AdmmConfig, run_aggregation
from securedfl.schedule import co_grouped
from securedfl.simnet import (
    FINAL_Z,
    PARTIAL_Z,
    Y,
    SimulationError,
    Transcript,
    message_counts,
    peer_view,
    replay,
    run_simulation,
    true_private_inputs,
)

from conftest import pv


@pytest.fixture(scope="module")
def grouped_run(gap4_schedule):
    ws = [pv(np.random.default_rng([7, k]).normal(size=6)) for k in range(9)]
    cfg = AdmmConfig(1.0, 7, GROUPED, gap4_schedule)
    return ws, cfg, run_simulation(ws, cfg, seed=3)


def test_counts_per_iteration(grouped_run):
    _, cfg, (_, tr, _) = grouped_run
    counts = message_counts(tr)
    assert sorted(counts) == list(range(1, 8))
    for c in counts.values():
        assert c == {Y: 9, PARTIAL_Z: 3, FINAL_Z: 1}
    assert len(tr.of_kind(FINAL_Z)) == cfg.max_iterations


def test_matches_engine(grouped_run):
    ws, cfg, (z, tr, _) = grouped_run
    direct = run_aggregation(ws, cfg, 3)
    assert z == direct.z
    assert tr.final_z() == [t.z for t in direct.traces]


def test_y_stays_in_group(grouped_run, gap4_schedule):
    _, _, (_, tr, _) = grouped_run
    for m in tr.of_kind(Y):
        assert all(co_grouped(gap4_schedule, m.iteration, m.sender, u) for u in m.audience)
        assert len(m.audience) == 3


def test_view_contents(grouped_run, gap4_schedule):
    ws, _, (_, tr, _) = grouped_run
    block = gap4_schedule.classes[0][0]
    observer, target = block[0], block[1]
    view = peer_view(tr, observer)
    assert view.observed_iterations(target) == [1, 5]
    assert view.own_w == ws[observer]
    assert sorted(view.z) == list(range(8))
    assert all(len(view.partial_z[i]) == 3 for i in range(1, 8))
    others = {m.sender for m in tr.messages if observer in m.audience and m.field == "w"}
    assert others == {observer}


def test_all_to_all_view_sees_everything():
    ws = [pv([float(k)]) for k in range(4)]
    _, tr, _ = run_simulation(ws, AdmmConfig(1.0, 3, ALL_TO_ALL), 0)
    view = peer_view(tr, 2)
    assert set(view.y) == {(i, k) for i in range(1, 4) for k in range(4)}


def test_unknown_observer(grouped_run):
    with pytest.raises(SimulationError):
        peer_view(grouped_run[2][1], 9)


def test_conservation(grouped_run):
    _, _, (_, tr, _) = grouped_run
    finals = {m.iteration: m.payload for m in tr.of_kind(FINAL_Z)}
    for i, z in finals.items():
        total = sum(m.payload.data for m in tr.of_kind(PARTIAL_Z) if m.iteration == i)
        np.testing.assert_allclose(total, z.data, atol=1e-12)


def test_jsonl_roundtrip_and_replay(grouped_run, tmp_path):
    ws, _, (_, tr, _) = grouped_run
    path = tmp_path / "t.jsonl"
    tr.save(path)
    back = Transcript.load(path)
    assert back.dumps() == tr.dumps()
    assert replay(back) == tr.final_z()
    assert true_private_inputs(back) == ws
    header = tr.dumps().splitlines()[0]
    assert '"securedfl-transcript"' in header


def test_append_order_enforced(grouped_run):
    _, _, (_, tr, _) = grouped_run
    with pytest.raises(SimulationError):
        tr.append(tr.messages[0])
