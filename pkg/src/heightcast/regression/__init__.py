from .data import LabeledDataset, TrainingMix, assemble_training_set, split
from .metrics import Metrics, evaluate
from .models import MODEL_KINDS, TrainedModel, load_model, predict, save_model, train

__all__ = [
    "LabeledDataset", "TrainingMix", "assemble_training_set", "split",
    "Metrics", "evaluate", "MODEL_KINDS", "TrainedModel", "train", "predict",
    "save_model", "load_model",
]
