# app/data/__init__.py
from .batching import *
from .synthetic import *
from .transforms import *
from .loaders import *
from .factory import *
