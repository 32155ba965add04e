"""Covering certificates, itinerary shadowing and escape-rate classification
for transcendental maps."""

from .catalog import (EvalResult, MapDescriptor, OrbitRecord, catalog, derivative,
                      evaluate, make_map, orbit)
from .classify import (ClassifierParams, EscapeRateClassifier, GridSpec, RateClass,
                       classify_orbit, distortion_probe, iterate_max_modulus,
                       render_escape_classes)
from .construct import (construct_oscillating, construct_slow_point, construct_two_sided,
                        feasibility_check)
from .covering import CoveringCertificate, certify_covering, preimage_annulus
from .errors import EscapeLabError, ParameterError, Refusal
from .itinerary import TargetSequence, refine_point, verify_itinerary
from .polechain import build_pole_chain
from .radial import max_modulus, min_modulus
from .regions import Annulus, Disc

__version__ = "0.1.0"
