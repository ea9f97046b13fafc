"""reportloom: spatial workspace edits in, targeted report revisions out.

The package is layered; each layer only knows the one below it:

- ``workspace``: the canvas model (frames, documents, highlights, notes) and
  prompt settings, with validation and payload serialization.
- ``synth``: random well-formed snapshots and edit walks, for tests.
- ``perception``: diff two snapshots into a typed interaction stream.
- ``narrative``: report structure, anchoring rules, sentence diffing, and the
  generation context with its workspace fingerprint.
- ``agents``: the model seam (schemas, backends, deterministic rule backend)
  and the generate/infer/refine pipeline with scope enforcement.
- ``evaluation``: targeting and fidelity metrics, the case format, and the
  refinement-vs-regeneration harness.
- ``service``: event-sourced sessions behind an HTTP API.
"""

__version__ = "0.1.0"
