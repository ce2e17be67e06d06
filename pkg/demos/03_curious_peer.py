"""A curious peer tries to recover another peer's private vector.

With all-to-all messaging two iterations are enough. With a group schedule
the attacker needs two observations of the target, and cyclic reuse of the
partitions brings the second one at ``c + 1 + gap`` for a pair first grouped
in class ``c``.
"""

import numpy as np

from securedfl import AdmmConfig, ALL_TO_ALL, GROUPED, ParamVector, generate_schedule
from securedfl.adversary import attack, breach_iteration, reconstruct_closed_form
from securedfl.simnet import peer_view, run_simulation

rng = np.random.default_rng(3)
ws = [ParamVector.from_array(rng.normal(size=4)) for _ in range(9)]

_, tr, _ = run_simulation(ws, AdmmConfig(1.0, 2, ALL_TO_ALL), seed=0)
w_hat = reconstruct_closed_form(peer_view(tr, 0), 5)
print("all-to-all, two iterations")
print("  true w_5     ", np.round(ws[5].data, 6))
print("  recovered    ", np.round(w_hat.data, 6))

sch = generate_schedule(9, 3, seed=0)
_, tr, _ = run_simulation(ws, AdmmConfig(1.0, 8, GROUPED, sch, unsafe=True), seed=0)
print(f"\ngap-{sch.gap} schedule, 8 iterations (past the default limit)")
print("class  pair    first unique T  predicted")
for c, pc in enumerate(sch.classes):
    a, b = pc[0][:2]
    first = next((T for T in range(1, 9) if attack(tr, a, b, T).unique), None)
    print(f"{c:>5}  {a},{b}  {first!s:>14}  {breach_iteration(sch, a, b):>9}")
