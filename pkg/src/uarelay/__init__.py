"""Stochastic-geometry model of uplink user-assisted partial decode-and-forward relaying.

Modules:

* :mod:`uarelay.geometry` - PPP sampling, base-station placement, distance laws
* :mod:`uarelay.policies` - cooperation rules and their probabilities
* :mod:`uarelay.interference` - interference moments, Laplace transforms, Gamma fits
* :mod:`uarelay.rates` - achievable rates and policy-averaged rates
* :mod:`uarelay.montecarlo` - network simulator used as the oracle
* :mod:`uarelay.cli` - experiment runner
"""

__version__ = "0.1.0"
