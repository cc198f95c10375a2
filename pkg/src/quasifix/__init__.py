"""Proinov-type Z-contractions on quasi-metric intervals: verification, Picard
iteration and IFS attractors under the Hausdorff-Pompeu quasi-metric."""
from .config import PRESETS, ConfigError, SystemConfig, load_config, preset
from .contraction import (ContractionSystem, ControlPair, audit_hypotheses,
                          probe_asymptotic_regularity, probe_continuity, verify_inequality)
from .expr import DomainError, ExprError, Expression, ParseError, evaluate, parse
from .hyperspace import FiniteCompactSet, check_union_bound, hausdorff, q_gap
from .ifs import (AttractorRun, IfsSystem, apply_operator, compute_attractor,
                  verify_hyperspace_contraction)
from .picard import Trajectory, iterate, uniqueness_probe
from .report import Check, Report
from .simfun import SimulationFunction, check_z_properties, eval_xi, make_max_combined
from .spaces import (QuasiMetricError, QuasiMetricSpace, SampleGrid, check_axioms,
                     estimate_delta, eval_q)

__version__ = "0.1.0"
