from .base import ClassifierKind, ClassifierSpec, TrainedModel, fit, predict
from .logreg import logreg_objective
from .metrics import balanced_accuracy, confusion_matrix

__all__ = (
    'ClassifierKind',
    'ClassifierSpec',
    'TrainedModel',
    'fit',
    'predict',
    'logreg_objective',
    'balanced_accuracy',
    'confusion_matrix',
)
