from . import kernels
from . import svm
from . import ga
from . import multiclass
from . import learnpp
from . import modelio
from . import iluga
