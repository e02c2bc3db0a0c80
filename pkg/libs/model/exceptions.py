from libs.exceptions import SvciError


class EvaluationInputError(SvciError): pass
class ModelInputError(SvciError): pass
