# app/core/__init__.py
from .norm_ops import *
from .network import *
