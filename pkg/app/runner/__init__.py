# app/runner/__init__.py
from .config_loader import *
from .results import *
from .experiments import *
from .compare import *
