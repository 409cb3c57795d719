# app/metrics/__init__.py
from .guess_stats import *
from .ensemble import *
from .variance_ratio import *
from .filtering import *
from .ks import *
from .norm_equivalence import *
