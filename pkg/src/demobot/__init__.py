"""demobot: train recurrent mixture-density gripper controllers from
demonstrations collected in a deterministic tabletop simulator."""

__version__ = "0.1.0"
