### define version
__version__ = "0.1.0"
version = __version__
### imports
from . import (
    exact,
    posit,
    engine,
    oracle,
    fuzz,
    accuracy,
    parsers,
    options,
    cli,
)
