"""
germlab
Lipschitz geometry of surface germs: sections, invariants and verified constructions
"""
from .config import settings

__version__ = settings.APP_VERSION
