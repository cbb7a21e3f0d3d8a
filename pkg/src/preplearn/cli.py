"""Command-line entry points for the service binary.

serve            run the HTTP service
register-video   persist a video record
ingest-subtitles parse a subtitle file and link it to a video
dump-prompt      emit the prompt variants built for a question
export           write a collection as JSON lines to stdout
compact          rewrite journals down to current state
init-config      print a ready-to-run config document
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import example_config, load_config
from .gateway import NotAQuestion
from .models import DomainError, ResponseKind
from .prompts import build_prompt
from .store import Store
from .subtitles import parse_track


def _emit(doc: dict) -> None:
    print(json.dumps(doc, ensure_ascii=False, indent=2))


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    config = load_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port)
    return 0


def cmd_register_video(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    with Store(config.data_dir) as store:
        video = store.create_video(
            args.title, args.source_id, args.duration, args.group
        )
        _emit(video.to_record())
    return 0


def cmd_ingest_subtitles(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    document = Path(args.file).read_text(encoding="utf-8")
    with Store(config.data_dir) as store:
        track = parse_track(document, args.format, language_tag=args.language)
        stored = store.link_subtitle_track(args.video_id, track)
        _emit(
            {
                "track_id": stored.track_id,
                "video_id": args.video_id,
                "language_tag": stored.language_tag,
                "format": stored.source_format,
                "cue_count": len(stored.cues),
            }
        )
    return 0


def cmd_dump_prompt(args: argparse.Namespace) -> int:
    """Print the envelope(s) that would be sent for a question.

    By default both variants are emitted — the transcript-backed one and the
    bare one — so they can be compared side by side; --without-subtitles
    restricts the output to the bare variant.
    """
    config = load_config(args.config)
    with Store(config.data_dir) as store:
        response = store.get_response(args.response_id)
        if response.kind is not ResponseKind.QUESTION:
            raise NotAQuestion(f"response {args.response_id} is {response.kind.value}")
        video = store.get_video(response.video_id)
        track = store.track_for_video(response.video_id)

        def variant(include: bool):
            return build_prompt(
                video,
                replace(response, include_subtitles=include),
                track if include else None,
                config.template,
                budget_tokens=config.budget_tokens,
                radius_s=config.window_radius_s,
                model_id=config.provider.model_id,
            )

        out: dict = {"response_id": response.response_id}
        if not args.without_subtitles:
            out["with_subtitles"] = variant(True).to_record()
        out["without_subtitles"] = variant(False).to_record()
        _emit(out)
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    with Store(config.data_dir) as store:
        count = store.export_collection(args.collection, sys.stdout)
    print(f"exported {count} rows from {args.collection}", file=sys.stderr)
    return 0


def cmd_compact(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    with Store(config.data_dir) as store:
        store.compact()
    print("journals compacted", file=sys.stderr)
    return 0


def cmd_init_config(args: argparse.Namespace) -> int:
    doc = json.dumps(example_config(), ensure_ascii=False, indent=2) + "\n"
    if args.path == "-":
        sys.stdout.write(doc)
    else:
        Path(args.path).write_text(doc, encoding="utf-8")
        print(f"wrote {args.path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="preplearn",
        description="Preparation-learning response service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--config", required=True, help="path to the JSON config file")
        return p

    p = with_config(sub.add_parser("serve", help="run the HTTP service"))
    p.set_defaults(fn=cmd_serve)

    p = with_config(sub.add_parser("register-video", help="persist a video record"))
    p.add_argument("--title", required=True)
    p.add_argument("--source-id", default="", help="id on the external video platform")
    p.add_argument("--duration", type=float, required=True, help="length in seconds")
    p.add_argument(
        "--group", action="append", default=[], help="assigned group id (repeatable)"
    )
    p.set_defaults(fn=cmd_register_video)

    p = with_config(
        sub.add_parser("ingest-subtitles", help="parse and link a subtitle file")
    )
    p.add_argument("video_id")
    p.add_argument("file")
    p.add_argument("--format", choices=("vtt", "webvtt", "srt"), default="vtt")
    p.add_argument("--language", default="en")
    p.set_defaults(fn=cmd_ingest_subtitles)

    p = with_config(
        sub.add_parser("dump-prompt", help="emit the prompt variants for a question")
    )
    p.add_argument("response_id")
    p.add_argument(
        "--without-subtitles",
        action="store_true",
        help="emit only the variant that omits the transcript excerpt",
    )
    p.set_defaults(fn=cmd_dump_prompt)

    p = with_config(sub.add_parser("export", help="write a collection as JSON lines"))
    p.add_argument("collection", help="videos, users, responses, replies, events, ...")
    p.set_defaults(fn=cmd_export)

    p = with_config(sub.add_parser("compact", help="rewrite journals to current state"))
    p.set_defaults(fn=cmd_compact)

    p = sub.add_parser("init-config", help="print a ready-to-run config document")
    p.add_argument("path", nargs="?", default="-", help="target file, or - for stdout")
    p.set_defaults(fn=cmd_init_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DomainError as exc:
        print(
            json.dumps({"error": exc.code, "message": str(exc)}, ensure_ascii=False),
            file=sys.stderr,
        )
        return 2
    except FileNotFoundError as exc:
        print(
            json.dumps({"error": "file_not_found", "message": str(exc)}),
            file=sys.stderr,
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
