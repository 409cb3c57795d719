# app/schemas/__init__.py
from .network_schema import *
from .norm_schema import *
from .trace_schema import *
from .theory_schema import *
from .metrics_schema import *
from .train_schema import *
from .dataset_schema import *
from .experiment_schema import *
