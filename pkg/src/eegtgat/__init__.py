"""EEG segment classification with a temporally-augmented graph attention network.

Subpackages:
    numerics  -- dense tensors with reverse-mode differentiation
    dsp       -- filtering, epoching, and normalization of raw recordings
    graphs    -- fully connected channel graphs and batching
    model     -- temporal encoder, temporal attention, GATv2 layers, classifier
    train     -- optimizer, losses, grouped cross-validation, metrics
    synth     -- synthetic recording generator for end-to-end verification
    cli       -- command-line entry points
"""

__version__ = "0.1.0"
