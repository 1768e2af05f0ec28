"""
MIT License

Copyright (c) 2024-present ressf developers

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from hashlib import md5
from typing import Any, Mapping, Optional, Sequence


def digest(to_hash: str, salt: Optional[str] = None) -> str:
    """md5 hex digest of a string, optionally salted"""
    if not salt:
        salt = ""
    _hashed = md5((to_hash + salt).encode())
    return _hashed.hexdigest()


def config_digest(config: Mapping[str, Any]) -> str:
    """Digest of the canonical JSON of a configuration mapping"""
    return digest(json.dumps(config, sort_keys=True, separators=(",", ":"), default=str))


@dataclass(frozen=True)
class plural:
    """f"{plural(3):check}" gives 3 checks; irregular nouns are written entry|entries"""

    value: int

    def __format__(self, noun: str) -> str:
        one, _, many = noun.partition("|")
        return f"{self.value} {one if abs(self.value) == 1 else many or one + 's'}"


def human_join(seq: Sequence[str], delim: str = ", ", final: str = "or") -> str:
    """Suite and field names for log lines, as in a, b and c"""
    if len(seq) < 2:
        return "".join(seq)
    return f"{delim.join(seq[:-1])} {final} {seq[-1]}"
