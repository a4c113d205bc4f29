"""Shared-teleoperation controller and verification suite for multi-object
nonprehensile tray transportation."""

# The control loop runs hundreds of tiny (<= few-hundred-dim) factorizations per
# second; multithreaded BLAS adds an order of magnitude of synchronization
# overhead at these sizes and jitters the cycle deadline, so pin it to one thread.
import threadpoolctl as _threadpoolctl

_blas_limit = _threadpoolctl.threadpool_limits(limits=1, user_api="blas")

from .errors import ConfigurationError, NumericGuardError, ValidationError
from .geom import AxisAngle, axis_angle_to_rotation, cross, rotation_to_axis_angle
from .harness import (
    CosineNoiseParams,
    ExperimentConfig,
    SIM_OFFSET_OBJECT,
    generate_input,
    run_experiment,
    sweep_table1,
    table1_manifest,
)
from .oracle import StabilityReport, contact_wrench, evaluate_run, object_kinematics, zmp
from .orientation import (
    GRAVITY,
    TrayState,
    approx_omega_dot,
    exact_orientation_derivatives,
    friction_free_orientation,
    snap_bound,
)
from .qp import ActiveSetQP, QpProblem, QpSolution
from .sigproc import BiquadCoeffs, BiquadFilter, FILTER_PRESETS, ReferenceState
from .smoother import (
    SmootherConfig,
    SmootherModel,
    StateBounds,
    TrajectorySmoother,
    assemble_qp,
    build_model,
    discretize_zoh,
)
from .vobject import ObjectSpec, OffsetObject, TrayGeometry, angular_accel_bound, build_offset_object

__version__ = "0.1.0"
