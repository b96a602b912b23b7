__author__ = "Adam Rumpf"
__version__ = "1.0.0"
_author_email = "arumpf@floridapoly.edu"
_copyright_year = "2026"
