# Copyright 2026 The asyncbcu developers, MIT license

from .problem import (BlockPartition, ProxTerm, ConstraintBlocks,
                      ProblemInstance, ZeroSmooth, QuadraticSmooth,
                      GramSmooth, CallableSmooth, residual, objective,
                      saddle_gap)
from .stepsize import (StepsizePlan, serial_plan, async_plan,
                       sync_parallel_plan, sync_plan)
from .serial import (SaddleState, RunConfig, StopRule, run, step,
                     ergodic_point, ergodic_average, check_eps_sigma,
                     lalm_instance)
from .parallel import EngineConfig, run_async, run_sync_parallel, delay_stats
from .delay import run_simulated_delay
from .instances import (GeneratorSpec, generate, reference_solve,
                        read_libsvm, load_instance, save_instance)
from .trace import RunTrace

__version__ = "0.3.0"
