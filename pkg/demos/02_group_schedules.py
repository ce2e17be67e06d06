"""Group schedules: partitions of the peers in which no pair meets twice.

The number of partitions is the gap, which is how many iterations pass before
two peers share a group again.
"""

from securedfl.schedule import (
    class_for_iteration,
    generate_schedule,
    max_secure_iterations,
    validate_schedule,
)

sch = generate_schedule(9, 3, seed=0)
print(f"n=9, s=3: {sch.gap} parallel classes")
for c, pc in enumerate(sch.classes):
    print(f"  class {c}: {pc}")
print("validation:", validate_schedule(sch).to_json_obj())
bound = max_secure_iterations(sch)
print(f"default iteration limit: {bound.iterations}, discard condition holds: {bound.discard_condition}")
print("iteration 5 reuses class 0:", class_for_iteration(sch, 5) == sch.classes[0])

for n, s in [(15, 3), (21, 3), (16, 4)]:
    counts = [generate_schedule(n, s, seed).gap for seed in range(5)]
    print(f"n={n}, s={s}: classes over 5 seeds {counts}")
