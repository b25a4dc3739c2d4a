"""Kinematic design-space tools for upper-limb rehabilitation exoskeletons."""

from .arm import ArmDOF, ArmModel, arm_fk, build_arm, elbow_axis, gh_center_path, load_arm
from .catalog import classify_catalog_entry, load_catalog
from .errors import (ArmConfigError, ConfigError, ConstructionError, InvalidArgument,
                     ROMError)
from .grammar import (ExoDesign, GrammarOptions, dof_gaps, dof_support, enumerate_designs,
                      load_grammar_options, realize_chain)
from .kinematics import (JointSpec, Pose, SerialChain, conditioning_metric, forward_kinematics,
                         numeric_jacobian, rotation_about_axis)
from .spherical import (AxisTriplet, GHConcept, axes_concurrency, canonical_3r_chain,
                        full_sphere_condition, gimbal_scan, sphere_coverage)
from .validators import CoupledModel, mobility_count, rom_coverage, singularity_scan, validate_design

__version__ = "0.1.0"
