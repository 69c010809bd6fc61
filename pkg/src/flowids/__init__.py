"""Flow-based packet classification with fixed-point decision trees.

Per-packet verdicts in the context of the packet's flow: a bounded flow
table keeps streaming statistics in Q47.16, a validated decision tree
classifies the assembled feature vector, and a compile backend lowers
the same tree to a bounded, float-free program form with a static
constraint checker. A benchmark harness compares backend throughput.
"""

__version__ = "0.1.0"
