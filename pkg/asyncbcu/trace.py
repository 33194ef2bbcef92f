# Copyright 2026 The asyncbcu developers, MIT license
"""
Per-epoch convergence records of a run.

The CSV schema is one row per recorded epoch with the columns

   epoch, obj_err, feas, ergodic_obj_err, ergodic_feas, wall_ms

and, depending on the engine, iterations_per_sec, max_delay,
mean_delay, dropped_messages (asynchronous engine) or tau (delay
simulator). Header lines start with '#' and hold the JSON config echo.

**Classes**

   * RunTrace - rows plus a header echoing the configuration

**Functions**

   * record_epoch - append the metrics of the current state

|

"""

#-----------------------------------------------------
# Import main libraries and modules
#-----------------------------------------------------

import io
import json
import logging

import numpy as np
import pandas as pd
import xarray as xr

from asyncbcu.errors import StateError, StructuralError
from asyncbcu.problem import objective, residual

logger = logging.getLogger(__name__)

BASE_COLUMNS = ("epoch", "obj_err", "feas", "ergodic_obj_err",
                "ergodic_feas", "wall_ms")
TIMING_COLUMNS = ("wall_ms", "iterations_per_sec")

#-------------------------------------------------------------------------
# RUN TRACE
#-------------------------------------------------------------------------

class RunTrace:

    """
    Convergence records of one run.

    **Attributes**

       header : dict
          configuration echo, instance fingerprint, initial metrics
       rows : list of dict
          one record per traced epoch, epochs strictly increasing

    **Methods**

       - append          : add one record
       - column          : one column as ndarray
       - epochs_to       : first epoch reaching a tolerance
       - to_frame        : pandas DataFrame of the rows
       - to_xarray       : xarray Dataset indexed by epoch
       - to_csv/from_csv : CSV file with a JSON header
       - validate        : raise if epochs are not strictly increasing
       - same_trajectory : compare deterministic columns with another trace

    |

    """

    def __init__(self, header=None, rows=None):
        self.header = dict(header or {})
        self.rows   = list(rows or [])

    def __len__(self):
        return len(self.rows)

    def append(self, **row):
        self.rows.append(row)

    @property
    def columns(self):
        cols = list(BASE_COLUMNS)
        for row in self.rows:
            for key in row:
                if (key not in cols):
                    cols.append(key)
        return cols

    def column(self, name):
        return np.array([row.get(name, np.nan) for row in self.rows],
                        dtype=float)

    def final(self):
        if (not self.rows):
            raise StateError("trace is empty")
        return dict(self.rows[-1])

    def epochs_to(self, tol, column="feas"):
        """First recorded epoch with column <= tol, None if never."""
        for row in self.rows:
            if (row[column] <= tol):
                return int(row["epoch"])
        return None

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=self.columns)

    def to_xarray(self):
        """
        Returns the rows as an xarray Dataset with dimension epoch and
        the header as attributes (JSON encoded values).

        |

        """

        frame = self.to_frame().set_index("epoch")
        ds = xr.Dataset.from_dataframe(frame)
        ds.attrs = {k: json.dumps(v) for k, v in self.header.items()}
        return ds

    def validate(self):
        """Raises StructuralError unless epochs strictly increase."""
        epochs = self.column("epoch")
        if (epochs.size and np.any(np.diff(epochs) <= 0)):
            bad = int(np.argmax(np.diff(epochs) <= 0)) + 1
            raise StructuralError("epochs not strictly increasing at row %d"
                                  % bad)
        return True

    def same_trajectory(self, other, columns=None):
        """
        True when the deterministic columns agree bitwise (timing
        columns are ignored).

        |

        """

        if (len(self) != len(other)):
            return False
        if (columns is None):
            columns = [c for c in BASE_COLUMNS if c not in TIMING_COLUMNS]
        for c in columns:
            a, b = self.column(c), other.column(c)
            if (not np.array_equal(a, b, equal_nan=True)):
                return False
        return True

    #---------------------------------------------------------------------
    # CSV I/O
    #---------------------------------------------------------------------

    def to_csv(self, path_or_buf=None):
        """
        Writes '# {json header}' followed by the rows. Returns the text
        when no path is given.

        |

        """

        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header, sort_keys=True,
                                    default=json_default) + "\n")
        self.to_frame().to_csv(buf, index=False, float_format="%.17g")
        text = buf.getvalue()
        if (path_or_buf is None):
            return text
        if (hasattr(path_or_buf, "write")):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            first = fh.readline()
            header = {}
            if (first.startswith("#")):
                header = json.loads(first[1:])
            else:
                fh.seek(0)
            frame = pd.read_csv(fh)
        rows = frame.to_dict(orient="records")
        return cls(header, rows)


def json_default(obj):
    if (isinstance(obj, np.integer)):
        return int(obj)
    if (isinstance(obj, np.floating)):
        return float(obj)
    if (isinstance(obj, np.ndarray)):
        return obj.tolist()
    raise TypeError("cannot encode %s" % type(obj).__name__)

#-------------------------------------------------------------------------
# Metrics
#-------------------------------------------------------------------------

def _obj_err(instance, x):
    val = objective(instance, x)
    if (not np.isfinite(val)):
        raise StateError("iterate left the domain of g (F = %r)" % (val,))
    if (instance.optimum is None):
        return np.nan
    return abs(val - instance.optimum.f_star)


def record_epoch(trace, instance, state, epoch, wall_ms, **extra):
    """
    Appends the metrics of `state` at the end of `epoch`: |F(x)-F*| and
    ||r|| of the running iterate, and the same for the ergodic average.

    |

    """

    x    = state.x
    xbar = state.ergodic_average(instance.m)
    trace.append(epoch=int(epoch),
                 obj_err=_obj_err(instance, x),
                 feas=float(np.linalg.norm(state.r)),
                 ergodic_obj_err=_obj_err(instance, xbar),
                 ergodic_feas=float(np.linalg.norm(residual(instance, xbar))),
                 wall_ms=float(wall_ms),
                 **extra)
    logger.debug("epoch %d feas %.3e", epoch, trace.rows[-1]["feas"])


def instance_fingerprint(instance):
    """Short description of an instance for trace headers."""
    meta = dict(instance.metadata)
    meta.update({"n": instance.n, "q": instance.q, "m": instance.m})
    return meta
