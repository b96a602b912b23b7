import setuptools

# Settings defined in setup.cfg
setuptools.setup()
