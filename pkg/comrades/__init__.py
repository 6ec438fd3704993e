from comrades.coordinator import (
    Coordinator,
    CoordinatorConfig,
    CampaignStart,
    JoinPolicy,
    NoFeasibleStart,
)
from comrades.crypto import ClientIdentity, CryptoError, Sealer, seal, unseal
from comrades.dht import SimulatedDht
from comrades.payload import ProtocolError
from comrades.scenario import InvalidScenario, Scenario, load_scenario
from comrades.sim import Simulation, run
from comrades.site import TargetSite
from comrades.target import CanonicalUrl, EmailDocument, evaluate
from comrades.trust import TrustConfig, TrustDb, Verdict
from comrades.usage import UsageWindows


__all__ = (
    'CampaignStart',
    'CanonicalUrl',
    'ClientIdentity',
    'Coordinator',
    'CoordinatorConfig',
    'CryptoError',
    'EmailDocument',
    'InvalidScenario',
    'JoinPolicy',
    'NoFeasibleStart',
    'ProtocolError',
    'Scenario',
    'Sealer',
    'SimulatedDht',
    'Simulation',
    'TargetSite',
    'TrustConfig',
    'TrustDb',
    'UsageWindows',
    'Verdict',
    'evaluate',
    'load_scenario',
    'run',
    'seal',
    'unseal',
)
