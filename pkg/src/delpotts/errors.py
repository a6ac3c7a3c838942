class LemmaFalsification(RuntimeError):
    """A structural claim that should hold on genuine inputs failed.

    Raised instead of proceeding: these claims are the load-bearing
    geometric facts and a failure must surface loudly (CLI exit code 1).
    """
