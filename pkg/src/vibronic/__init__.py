"""Vibronic spectra at three levels of approximation, with exact oracles.

Linear coupling (Poisson modes), parallel modes (displaced squeezed states)
and full Duschinsky mixing (Gaussian boson sampling with loop hafnians).
"""

__version__ = "0.1.0"

from .errors import NumericalError, ParseError, ValidationError, VibronicError
from .gbs import (
    GaussianState,
    build_gaussian,
    fock_oracle_fcf,
    gbs_enumerate,
    gbs_fcf,
    gbs_sample,
    no_frequency_change_decompose,
)
from .hafnian import hafnian, loop_hafnian
from .io import parse_molecule, problem_to_dict, read_spectrum, write_spectrum
from .linear import PhotonPattern, linear_enumerate, linear_fcf, linear_sample
from .model import (
    DisplacedSqueezedMode,
    DoktorovDecomposition,
    Tier,
    VibronicProblem,
    decompose,
    filter_modes,
    recommend_tier,
    select_modes,
)
from .parallel import dsq_mode_prob, parallel_enumerate, parallel_fcf, parallel_sample
from .sampling import SampleSet
from .spectrum import (
    LossModel,
    Spectrum,
    apply_loss_to_samples,
    assemble,
    compensate_loss,
    convolve,
    similarity,
)

__all__ = [
    "DisplacedSqueezedMode",
    "DoktorovDecomposition",
    "GaussianState",
    "LossModel",
    "NumericalError",
    "ParseError",
    "PhotonPattern",
    "SampleSet",
    "Spectrum",
    "Tier",
    "ValidationError",
    "VibronicError",
    "VibronicProblem",
    "apply_loss_to_samples",
    "assemble",
    "build_gaussian",
    "compensate_loss",
    "convolve",
    "decompose",
    "dsq_mode_prob",
    "filter_modes",
    "fock_oracle_fcf",
    "gbs_enumerate",
    "gbs_fcf",
    "gbs_sample",
    "hafnian",
    "linear_enumerate",
    "linear_fcf",
    "linear_sample",
    "loop_hafnian",
    "no_frequency_change_decompose",
    "parallel_enumerate",
    "parallel_fcf",
    "parallel_sample",
    "parse_molecule",
    "problem_to_dict",
    "read_spectrum",
    "recommend_tier",
    "select_modes",
    "similarity",
    "write_spectrum",
]
