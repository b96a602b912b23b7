from . import ilist
from . import randit
