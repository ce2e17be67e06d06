"""Parameter sweeps written as CSV, ready for any plotting tool."""

from securedfl.experiments import (
    iteration_rows_csv,
    oracle_iteration_below,
    schedule_rows_csv,
    sweep_iterations,
    sweep_schedule,
)

print(iteration_rows_csv(sweep_iterations(n=9, s=3, rho=1.0, dims=(10_000,), seeds=range(5))))
for rho in (0.1, 1.0):
    it = oracle_iteration_below(1e-13, 9, 10_000, rho, range(5))
    print(f"rho={rho}: mean MSE drops below 1e-13 at iteration {it}")
print()
print(schedule_rows_csv(sweep_schedule([9, 15, 21, 27], 3, range(5))))
