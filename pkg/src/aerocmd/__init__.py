"""aerocmd: natural-language drone operations at desk scale.

A typed drone-command language (AeroCmd), a retrieval-based NL→program
translator, a deterministic kinematic multirotor simulator, a framed JSON
wire protocol with an asynchronous server, an interactive operator console,
and an evaluation harness for translation quality.
"""

__version__ = "0.1.0"
