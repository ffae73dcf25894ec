"""Flexible DQN: a numpy-only DQN / Double-DQN training engine."""

from .agent import Agent, AgentConfig, EpsilonSchedule, epsilon_at, select_action, td_targets
from .config import TrainConfig, apply_overrides, load_config
from .nn import AdamState, NetworkSpec, Parameters, adam_step, forward, init_params, loss_and_grads
from .replay import ReplayBuffer, Transition, TransitionBatch
from .runner import evaluate, train

__version__ = "0.1.0"
