# noinspection PyCompatibility
from geoq import const, extended_dynamics, phase_space, prequantum, quantum_reduction, version
from geoq.version import __version__
