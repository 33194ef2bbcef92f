# Basis pursuit: serial block updates against one-block LALM for
# several beta.

from pathlib import Path

import matplotlib.pyplot as plt

from asyncbcu.bench import expand_cells, parse_plan, run_cell
from asyncbcu.instances import generate
from asyncbcu.stepsize import ensure_lipschitz

#------------------------------------------------
# Read the plan, one seed is enough for a figure
#------------------------------------------------

plan       = parse_plan(Path(__file__).with_name("bp_beta_sweep.ini"))
plan.seeds = plan.seeds[:1]
instance   = ensure_lipschitz(generate(plan.instance))
print('instance ', instance.metadata)

#------------------------------------------------
# Run every cell
#------------------------------------------------

traces = {}
for cell in expand_cells(plan):
    print('----- %s -----' % cell.label)
    traces[cell.label] = run_cell(plan, cell, instance)

#------------------------------------------------
# Ergodic objective error and feasibility
#------------------------------------------------

fig = plt.figure(figsize=(10, 4))
ax1 = fig.add_subplot(1, 2, 1)
ax2 = fig.add_subplot(1, 2, 2)
for label, trace in traces.items():
    style = '-' if label.startswith('serial') else '--'
    ax1.semilogy(trace.column('epoch'), trace.column('ergodic_obj_err'),
                 style, label=label)
    ax2.semilogy(trace.column('epoch'), trace.column('ergodic_feas'),
                 style, label=label)
ax1.set_xlabel('epoch')
ax1.set_ylabel('|F(xbar) - F*|')
ax2.set_xlabel('epoch')
ax2.set_ylabel('||A xbar - b||')
ax2.legend()

plt.show()
