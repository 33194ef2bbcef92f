# Dual SVM: speedup of the sync and async engines over one node.

import sys
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

from asyncbcu.bench import main

#------------------------------------------------
# Time both engines, the table lands in the
# output directory
#------------------------------------------------

plan = Path(__file__).with_name("svm_parallel.ini")
out  = Path("svm-speedup")
code = main(["-v", "speedup", str(plan), "--output-dir", str(out)])
if (code != 0):
    sys.exit(code)

table = pd.read_csv(out/"speedup.csv")

fig = plt.figure()
ax  = fig.add_subplot(1, 1, 1)
ax.plot(table['p'], table['sync_speedup'], 'o-', label='sync')
ax.plot(table['p'], table['async_speedup'], 's-', label='async')
ax.plot(table['p'], table['p'], 'k:', label='linear')
ax.set_xlabel('nodes')
ax.set_ylabel('speedup')
ax.legend()

plt.show()
