"""DRT inversion of dielectric relaxation spectra.

Thin package wrapper around the compiled module; everything public lives
in the extension.
"""

from ._relaxo import *  # noqa: F401,F403
from ._relaxo import __version__  # noqa: F401
