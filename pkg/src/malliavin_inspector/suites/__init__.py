from .base import BaseSuite
from .operators import ChaosSuite, OperatorSuite
from .glauber import GlauberSuite
from .concentration import ConcentrationSuite
from .normal_approx import BernoulliSuite, WassersteinSuite
from .ustat import DeJongSuite, FourthMomentSuite
from .hypergraphs import HypergraphSuite

SUITE_CLASSES = {
    suite.command: suite
    for suite in (
        OperatorSuite,
        ChaosSuite,
        GlauberSuite,
        ConcentrationSuite,
        BernoulliSuite,
        WassersteinSuite,
        FourthMomentSuite,
        DeJongSuite,
        HypergraphSuite,
    )
}


__all__ = [
    "BaseSuite",
    "OperatorSuite",
    "ChaosSuite",
    "GlauberSuite",
    "ConcentrationSuite",
    "BernoulliSuite",
    "WassersteinSuite",
    "FourthMomentSuite",
    "DeJongSuite",
    "HypergraphSuite",
    "SUITE_CLASSES",
]
