from libs.exceptions import SvciError


class GaussianProcessError(SvciError): pass
class UnboundedIntensityError(SvciError): pass
class ScenarioSpecError(SvciError): pass
