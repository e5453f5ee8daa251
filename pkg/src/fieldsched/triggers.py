"""Platform triggers and the patterns reactive guards match against.

Exactly one trigger accompanies every device firing: a timer tick, a sensor
change, a message arrival, or a message expiry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

TICK = "tick"
SENSOR = "sensor"
MESSAGE_RECEIVED = "message_received"
MESSAGE_TIMEOUT = "message_timeout"


@dataclass(frozen=True)
class Trigger:
    kind: str
    name: str = ""  # timer id or sensor name
    module_id: str = ""
    sender: Optional[int] = None

    @staticmethod
    def tick(timer_id: str = "default") -> "Trigger":
        return Trigger(TICK, name=timer_id)

    @staticmethod
    def sensor(name: str) -> "Trigger":
        return Trigger(SENSOR, name=name)

    @staticmethod
    def message_received(module_id: str, sender: int) -> "Trigger":
        return Trigger(MESSAGE_RECEIVED, module_id=module_id, sender=sender)

    @staticmethod
    def message_timeout(module_id: str, sender: int) -> "Trigger":
        return Trigger(MESSAGE_TIMEOUT, module_id=module_id, sender=sender)

    def __repr__(self):
        if self.kind == TICK:
            return f"TICK({self.name})"
        if self.kind == SENSOR:
            return f"SENSOR({self.name!r})"
        return f"{self.kind.upper()}({self.module_id!r}, {self.sender})"


@dataclass(frozen=True)
class TriggerPattern:
    """One accepted shape of trigger; see the factory methods for the forms.

    Sensor patterns carry a regular expression over sensor names, validated
    at construction.
    """

    kind: str
    name_regex: Optional[str] = None
    module_id: Optional[str] = None

    def __post_init__(self):
        if self.name_regex is not None:
            try:
                re.compile(self.name_regex)
            except re.error as exc:
                raise ValueError(f"malformed sensor pattern {self.name_regex!r}: {exc}") from exc

    @staticmethod
    def tick(timer_id: Optional[str] = None) -> "TriggerPattern":
        return TriggerPattern(TICK, name_regex=re.escape(timer_id) if timer_id else None)

    @staticmethod
    def sensor(name_regex: str) -> "TriggerPattern":
        return TriggerPattern(SENSOR, name_regex=name_regex)

    @staticmethod
    def message_received(module_id: str) -> "TriggerPattern":
        return TriggerPattern(MESSAGE_RECEIVED, module_id=module_id)

    @staticmethod
    def message_timeout(module_id: str) -> "TriggerPattern":
        return TriggerPattern(MESSAGE_TIMEOUT, module_id=module_id)

    def matches(self, trigger: Trigger) -> bool:
        if not isinstance(trigger, Trigger) or trigger.kind != self.kind:
            return False
        if self.kind in (MESSAGE_RECEIVED, MESSAGE_TIMEOUT):
            return self.module_id is None or trigger.module_id == self.module_id
        if self.name_regex is None:
            return True
        return re.fullmatch(self.name_regex, trigger.name) is not None
