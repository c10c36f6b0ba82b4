"""Callable handler lists used to observe solver progress."""

from __future__ import annotations

from collections.abc import Callable


class Event[**P](list[Callable[P, object]]):
    """An ordered list of handlers fired by calling the event.

    Handlers are added with ``+=`` and removed with ``-=``.  They run in
    registration order; an exception raised by a handler propagates to the
    code that fired the event, which is how cell deadlines abort a run.
    """

    def __iadd__(self, handler: Callable[P, object]) -> Event[P]:  # type: ignore[override]
        self.append(handler)
        return self

    def __isub__(self, handler: Callable[P, object]) -> Event[P]:
        self.remove(handler)
        return self

    def __call__(self, *args: P.args, **kwargs: P.kwargs) -> None:
        for handler in tuple(self):
            handler(*args, **kwargs)

    def __repr__(self) -> str:
        return f"Event(handlers={len(self)})"
