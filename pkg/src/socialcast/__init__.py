"""Viral-file dissemination over a coupled social / ad hoc wireless network.

The demand side is a random power-law social graph (Chung-Lu expected-degree
model); the bandwidth side is an ad hoc wireless network of the same nodes
placed uniformly on a sqrt(n)-width square.  The protocol module implements a
three-phase load-balancing dissemination algorithm; the harness measures how
its dissemination time scales with n and compares against algorithm-independent
lower bounds.
"""

__version__ = "0.1.0"
