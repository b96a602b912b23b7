from . import experiment
from . import report
