from libs.exceptions import SvciError


class GraphConstructionError(SvciError): pass
class FactorizationError(SvciError): pass
