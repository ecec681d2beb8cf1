from .ablate import cmd_ablate
from .embed_rotate import cmd_embed_rotate
from .evaluate import cmd_eval
from .generate_synth import cmd_generate_synth
from .sweep_aug import cmd_sweep_aug
from .train import cmd_train

__all__ = ["cmd_ablate", "cmd_embed_rotate", "cmd_eval", "cmd_generate_synth", "cmd_sweep_aug", "cmd_train"]
