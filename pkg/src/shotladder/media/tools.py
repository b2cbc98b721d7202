"""Subprocess wrappers around ffmpeg/ffprobe/libvmaf, plus the on-disk encode cache."""
from __future__ import annotations

import json
import logging
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from shotladder.errors import EncodeFailed, FrameMismatch, QualityToolFailed, ToolNotFound
from shotladder.manifest import ManifestEntry
from shotladder.media.jobs import EncodeJob
from shotladder.media.logparse import render_x265_log
from shotladder.media.synthetic import FRAME_COUNTS, SyntheticCodec, content_from_frames

log = logging.getLogger(__name__)

SYNTH_SUFFIX = ".synth.json"
LANCZOS = "flags=lanczos:param0=3"
SCORING_SIZE = (3840, 2160)

DEFAULT_CODEC_ARGS = {
    "x265": ["-c:v", "libx265", "-preset", "{preset}", "-crf", "{crf}"],
    "svtav1": ["-c:v", "libsvtav1", "-preset", "{preset}", "-crf", "{crf}"],
    "vpx-vp9": ["-c:v", "libvpx-vp9", "-b:v", "0", "-crf", "{crf}", "-cpu-used", "{preset}", "-row-mt", "1"],
    "aom-av1": ["-c:v", "libaom-av1", "-b:v", "0", "-crf", "{crf}", "-cpu-used", "{preset}"],
}


@dataclass
class ToolConfig:
    ffmpeg: str = "ffmpeg"
    ffprobe: str = "ffprobe"
    codec_args: dict[str, list[str]] = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_CODEC_ARGS.items()})
    vmaf_options: str = "log_fmt=json"
    timeout: float = 3600.0


@dataclass
class EncodeResult:
    path: Path
    bitrate: float
    log_text: str
    cached: bool = False


def _which(name: str) -> str:
    exe = shutil.which(name)
    if exe is None:
        raise ToolNotFound(f"{name} not found on PATH")
    return exe


def input_args(src: ManifestEntry) -> list[str]:
    """Demuxer flags for one manifest entry (raw planar YUV needs explicit geometry)."""
    args = []
    if src.is_raw:
        pix_fmt = src.pix_fmt
        if src.bit_depth > 8 and not pix_fmt.endswith("le"):
            pix_fmt = f"{pix_fmt}{src.bit_depth}le"
        args += ["-f", "rawvideo", "-pix_fmt", pix_fmt, "-s:v", f"{src.width}x{src.height}", "-r", f"{src.fps:g}"]
    return args + ["-i", str(src.path)]


def encode_command(job: EncodeJob, src: ManifestEntry, out: Path, tools: ToolConfig, ffmpeg: str = "ffmpeg") -> list[str]:
    if job.codec not in tools.codec_args:
        raise EncodeFailed(f"no command template for codec {job.codec!r}")
    cmd = [ffmpeg, "-hide_banner", "-nostdin", "-y", *input_args(src)]
    if src.frame_limit:
        cmd += ["-frames:v", str(src.frame_limit)]
    if (job.width, job.height) != (src.width, src.height):
        cmd += ["-vf", f"scale={job.width}:{job.height}:{LANCZOS}"]
    cmd += [a.format(crf=job.crf, preset=job.preset) for a in tools.codec_args[job.codec]]
    cmd += ["-an", str(out)]
    return cmd


def source_frame_count(src: ManifestEntry) -> int | None:
    """Frames that will be encoded, when knowable without decoding."""
    if src.is_raw and Path(src.path).exists():
        chroma = {"420": 0.5, "422": 1.0, "444": 2.0}[src.chroma]
        bytes_per_sample = 2 if src.bit_depth > 8 else 1
        frame_bytes = int(src.width * src.height * (1 + chroma) * bytes_per_sample)
        n = os.path.getsize(src.path) // frame_bytes
        return min(n, src.frame_limit) if src.frame_limit else n
    return src.frame_limit or None


def run_encode(
    job: EncodeJob,
    src: ManifestEntry,
    cache_dir: str | Path,
    tools: ToolConfig | None = None,
    synthetic: SyntheticCodec | None = None,
) -> EncodeResult:
    """Encode one job, reusing the content-addressed cache when present.

    The encode log is kept beside the bitstream. For the synthetic codec no
    process is started: a JSON stand-in for the bitstream is written, along
    with an x265-format log carrying the synthetic compression statistics.
    """
    tools = tools or ToolConfig()
    job_dir = Path(cache_dir) / job.key()
    meta_path = job_dir / "result.json"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        return EncodeResult(Path(meta["path"]), float(meta["bitrate"]), (job_dir / "encode.log").read_text(), cached=True)

    if job.codec == "synthetic":
        return _run_synthetic(job, src, job_dir, synthetic or SyntheticCodec())

    if not Path(src.path).exists():
        raise EncodeFailed(f"source {src.path} does not exist")
    ffmpeg = _which(tools.ffmpeg)
    job_dir.mkdir(parents=True, exist_ok=True)
    out = job_dir / "encoded.mkv"
    cmd = encode_command(job, src, out, tools, ffmpeg)
    log.debug("encode %s: %s", job, " ".join(cmd))
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=tools.timeout)
    log_text = proc.stderr
    (job_dir / "encode.log").write_text(log_text)
    if proc.returncode != 0 or not out.exists():
        raise EncodeFailed(f"{tools.ffmpeg} exited with {proc.returncode} for {job}", log_text[-2000:])
    frames = source_frame_count(src)
    if not frames:
        raise EncodeFailed(f"cannot determine frame count of {src.path}; set frame_limit in the manifest")
    bitrate = out.stat().st_size * 8.0 * src.fps / frames / 1000.0
    _write_meta(meta_path, job, out, bitrate)
    return EncodeResult(out, bitrate, log_text)


def _write_meta(meta_path: Path, job: EncodeJob, out: Path, bitrate: float, **extra) -> None:
    tmp = meta_path.with_suffix(".tmp")
    tmp.write_text(json.dumps({"job": job.__dict__, "path": str(out), "bitrate": bitrate, **extra}, sort_keys=True))
    tmp.replace(meta_path)


def _run_synthetic(job: EncodeJob, src: ManifestEntry, job_dir: Path, codec: SyntheticCodec) -> EncodeResult:
    descriptor = codec.content.get(job.video_id)
    if descriptor is None and src.path and Path(src.path).exists() and src.is_raw:
        from shotladder.features.yuv import read_yuv

        frames = read_yuv(src.path, src.width, src.height, src.pix_fmt, src.bit_depth, src.frame_limit)
        descriptor = content_from_frames(frames.y)
        codec.content[job.video_id] = descriptor
    elif descriptor is None and src.path and not Path(src.path).exists():
        raise EncodeFailed(f"source {src.path} does not exist")
    point = codec.encode(job, descriptor)
    job_dir.mkdir(parents=True, exist_ok=True)
    out = job_dir / f"encoded{SYNTH_SUFFIX}"
    out.write_text(json.dumps({"source": str(src.path), "bitrate": point.bitrate, "quality": point.quality}))
    log_text = render_x265_log(point.stats, FRAME_COUNTS)
    (job_dir / "encode.log").write_text(log_text)
    _write_meta(job_dir / "result.json", job, out, point.bitrate)
    return EncodeResult(out, point.bitrate, log_text)


def decode_source(src: ManifestEntry, tools: ToolConfig | None = None):
    """Load a manifest entry as a :class:`YUVVideo`; containers are decoded to raw planar YUV by ffmpeg."""
    from shotladder.features.yuv import read_yuv

    if src.is_raw:
        if not Path(src.path).exists():
            raise FileNotFoundError(f"source {src.path} does not exist")
        return read_yuv(src.path, src.width, src.height, src.pix_fmt, src.bit_depth, src.frame_limit)
    tools = tools or ToolConfig()
    if not Path(src.path).exists():
        raise FileNotFoundError(f"source {src.path} does not exist")
    ffmpeg = _which(tools.ffmpeg)
    pix_fmt = "yuv420p" if src.bit_depth <= 8 else "yuv420p16le"
    with tempfile.TemporaryDirectory() as tmp:
        raw = Path(tmp) / "src.yuv"
        cmd = [ffmpeg, "-hide_banner", "-nostdin", "-y", "-i", str(src.path)]
        if src.frame_limit:
            cmd += ["-frames:v", str(src.frame_limit)]
        cmd += ["-f", "rawvideo", "-pix_fmt", pix_fmt, str(raw)]
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=tools.timeout)
        if proc.returncode != 0:
            raise EncodeFailed(f"cannot decode {src.path}", proc.stderr[-2000:])
        return read_yuv(raw, src.width, src.height, "yuv420p", 8 if src.bit_depth <= 8 else 16, src.frame_limit)


def count_frames(path: str | Path, src: ManifestEntry | None = None, tools: ToolConfig | None = None) -> int:
    tools = tools or ToolConfig()
    if src is not None and src.is_raw:
        n = source_frame_count(src)
        if n is not None:
            return n
    ffprobe = _which(tools.ffprobe)
    args = [ffprobe, "-v", "error"]
    if src is not None:
        args += input_args(src)[:-2]
    args += ["-select_streams", "v:0", "-count_frames", "-show_entries", "stream=nb_read_frames", "-of", "json", str(path)]
    proc = subprocess.run(args, capture_output=True, text=True, timeout=tools.timeout)
    if proc.returncode != 0:
        raise QualityToolFailed(f"ffprobe failed on {path}: {proc.stderr.strip()[-500:]}")
    try:
        return int(json.loads(proc.stdout)["streams"][0]["nb_read_frames"])
    except (KeyError, IndexError, ValueError, json.JSONDecodeError) as exc:
        raise QualityToolFailed(f"unexpected ffprobe output for {path}: {exc}") from None


def vmaf_command(reference: ManifestEntry, distorted: str | Path, log_path: Path, tools: ToolConfig, ffmpeg: str = "ffmpeg") -> list[str]:
    w, h = SCORING_SIZE
    graph = (
        f"[0:v]scale={w}:{h}:{LANCZOS},setpts=PTS-STARTPTS[dist];"
        f"[1:v]scale={w}:{h}:{LANCZOS},setpts=PTS-STARTPTS[ref];"
        f"[dist][ref]libvmaf={tools.vmaf_options}:log_path={log_path}"
    )
    cmd = [ffmpeg, "-hide_banner", "-nostdin", "-i", str(distorted), *input_args(reference)]
    if reference.frame_limit:
        cmd += ["-frames:v", str(reference.frame_limit)]
    return cmd + ["-lavfi", graph, "-f", "null", "-"]


def measure_quality(reference: ManifestEntry, distorted: str | Path, tools: ToolConfig | None = None) -> float:
    """Mean VMAF of ``distorted`` against ``reference``, both scored at 3840x2160.

    Synthetic bitstreams carry their own score and are answered without a tool.
    """
    tools = tools or ToolConfig()
    distorted = Path(distorted)
    if distorted.name.endswith(SYNTH_SUFFIX):
        try:
            return float(json.loads(distorted.read_text())["quality"])
        except (OSError, KeyError, ValueError) as exc:
            raise QualityToolFailed(f"unreadable synthetic bitstream {distorted}: {exc}") from None

    ffmpeg = _which(tools.ffmpeg)
    n_ref = count_frames(reference.path, reference, tools)
    n_dist = count_frames(distorted, None, tools)
    if n_ref != n_dist:
        raise FrameMismatch(f"reference has {n_ref} frames, distorted has {n_dist}")
    with tempfile.TemporaryDirectory() as tmp:
        log_path = Path(tmp) / "vmaf.json"
        cmd = vmaf_command(reference, distorted, log_path, tools, ffmpeg)
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=tools.timeout)
        if proc.returncode != 0 or not log_path.exists():
            raise QualityToolFailed(f"libvmaf run failed ({proc.returncode}): {proc.stderr.strip()[-1000:]}")
        try:
            score = float(json.loads(log_path.read_text())["pooled_metrics"]["vmaf"]["mean"])
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise QualityToolFailed(f"cannot read VMAF log: {exc}") from None
    return min(100.0, max(0.0, score))
