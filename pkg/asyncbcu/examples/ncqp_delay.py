# Nonnegative QP: epochs to reach the feasibility tolerance as the
# delay bound grows.

from pathlib import Path

import matplotlib.pyplot as plt

from asyncbcu.bench import expand_cells, parse_plan, run_cell
from asyncbcu.instances import generate
from asyncbcu.parallel import delay_stats
from asyncbcu.stepsize import ensure_lipschitz

plan     = parse_plan(Path(__file__).with_name("ncqp_delay.ini"))
instance = ensure_lipschitz(generate(plan.instance))

#------------------------------------------------
# Run every delay bound
#------------------------------------------------

taus, epochs = [], []
fig = plt.figure(figsize=(10, 4))
ax  = fig.add_subplot(1, 2, 1)
for cell in expand_cells(plan):
    trace = run_cell(plan, cell, instance)
    max_d, mean_d, hist = delay_stats(trace)
    reached = trace.epochs_to(plan.feas_tol)
    print('tau %3d  mean delay %6.2f  epochs %s' % (cell.tau, mean_d, reached))
    taus.append(cell.tau)
    epochs.append(reached if reached is not None else plan.epochs)
    ax.semilogy(trace.column('epoch'), trace.column('feas'),
                label='tau = %d' % cell.tau)
ax.set_xlabel('epoch')
ax.set_ylabel('||r||')
ax.legend()

ax = fig.add_subplot(1, 2, 2)
ax.plot(taus, epochs, 'o-')
ax.set_xlabel('tau')
ax.set_ylabel('epochs to %g' % plan.feas_tol)

plt.show()
