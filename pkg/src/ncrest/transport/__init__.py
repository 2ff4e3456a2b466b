from .sim import Delivered, LossSchedule, Lost, SimulatedChannel, SimulatedSession, VirtualClock

__all__ = ["Delivered", "LossSchedule", "Lost", "SimulatedChannel", "SimulatedSession", "VirtualClock"]
