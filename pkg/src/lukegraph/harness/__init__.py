from .checkpoint import FORMAT_VERSION, Checkpoint
from .config import RunConfig
from .gradcheck import pipeline_gradcheck, tiny_example
from .model import LukeGraphModel, Prepared, prepare
from .train import TrainResult, evaluate, evaluate_model, no_decay_names, predict_prepared, report_json, train
