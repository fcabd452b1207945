"""Small pass/fail report used by the validators."""

from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    passed: bool
    worst: float = 0.0
    location: object = None
    detail: str = ""

    def to_dict(self):
        loc = self.location
        if hasattr(loc, "tolist"):
            loc = loc.tolist()
        return {"name": self.name, "passed": bool(self.passed), "worst": float(self.worst),
                "location": loc, "detail": self.detail}


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)

    def add(self, name, passed, worst=0.0, location=None, detail=""):
        self.checks.append(Check(name, bool(passed), float(worst), location, detail))
        return self

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self):
        return {"title": self.title, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks]}

    def __str__(self):
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            lines.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: worst={c.worst:.3e}"
                         + (f" at {c.location}" if c.location is not None else "")
                         + (f" ({c.detail})" if c.detail else ""))
        return "\n".join(lines)
