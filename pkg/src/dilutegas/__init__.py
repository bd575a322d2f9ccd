"""Perfect simulation of diluted gas models by the clan of ancestors.

The package provides configuration spaces, gas models and their diluteness
coefficients, a lazily generated free cylinder process, the clan-of-ancestors
sampler with its coupled variant for families of approximations, and exact
enumeration oracles for small discrete systems.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .config_space import *  # noqa: F401,F403
from .intensity import *  # noqa: F401,F403
from .geometry import orient2d, rod_endpoints, rods_intersect, segments_intersect  # noqa: F401
from .contours import *  # noqa: F401,F403
from .models import *  # noqa: F401,F403
from .diluteness import *  # noqa: F401,F403
from .diluteness import closed_form_for  # noqa: F401
from .free_process import *  # noqa: F401,F403
from .ffg_sampler import *  # noqa: F401,F403
from .coupling import *  # noqa: F401,F403
from .oracle import *  # noqa: F401,F403
from .specfile import build_model, load_spec, parse_spec  # noqa: F401
