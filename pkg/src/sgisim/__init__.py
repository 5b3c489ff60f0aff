"""Stern-Gerlach interferometry with a levitated nanodiamond hosting one NV centre.

Modules: ``nvspin`` (NV energies), ``geometry`` (field and ND geometry),
``dynamics`` (2D translation + libration and the interferometer phase),
``analytics`` (closed-form libration results), ``wavepacket`` (width
dynamics and overlap), ``spread`` (phase spread of the full model),
``experiments``/``cli`` (tables and the ``sgi`` command).
"""

__version__ = "0.1.0"
