"""Reinforcement-learning energy management for multi-power-source EVs.

Backward powertrain models (PHEV, FCEV), a discretized (power demand, SOC)
MDP environment with SOC constraints, four tabular learners, an exact
dynamic-programming oracle for verification, and a deterministic sweep and
reporting harness.
"""

from .agents import (ALGORITHMS, Hyperparams, MonteCarloAgent, QLearningAgent,
                     SarsaAgent, SarsaLambdaAgent, TabularAgent,
                     epsilon_greedy, evaluate_policy, mc_train,
                     qlearning_train, qlearning_update, run_fixed_policy,
                     sarsa_lambda_train, sarsa_train, sarsa_update, train)
from .cycle import DriveCycle, accel_at, load_cycle, save_cycle
from .env import (ActionSpec, ConstraintSpec, EmsEnvironment, Grid,
                  RewardSpec, StateSpec, Transition, discretize,
                  equivalence_factor, penalty, reward_of)
from .errors import (ConfigError, DataFileError, EmptyCurve, EmsError,
                     EpisodeFinished, IndexOutOfRange, MissingCell,
                     NegativeSpeed, NonUniformTimestep, ParseError,
                     PowerInfeasible, PowerOutOfRange)
from .experiments import (AvailabilityLabel, SweepSpec, availability_ranking,
                          baseline_reward, classify_availability,
                          energy_cost_heatmap, expand_sweep, export_report,
                          load_sweep, qtable_update_density, run_single,
                          run_sweep)
from .oracle import (ExplicitMdp, FixtureEnv, build_chain_mdp,
                     build_random_mdp, value_iteration)
from .powertrain import (BatteryModel, FuelCellCurves, OperatingPoint,
                         StepOutcome, TorqueSpeedMap, VehicleParams,
                         WheelDemand, battery_current, engine_fuel_rate,
                         fc_hydrogen_rate, fcev_plant_step, map_lookup,
                         motor_power, phev_plant_step, road_load, select_gear,
                         soc_delta, torque_limits)
from .records import (EvalTrace, LearningCurve, QTable, RunRecord,
                      config_hash, load_qtable, save_qtable)

__version__ = "0.1.0"
