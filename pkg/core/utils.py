import json
import os
import logging
import hashlib
import time
from functools import wraps
from pathlib import Path
from typing import Dict, Any, Optional, Union

import numpy as np
import scipy.sparse as sp

try:
    from pythonjsonlogger.json import JsonFormatter
except ImportError:  # python-json-logger < 3
    from pythonjsonlogger.jsonlogger import JsonFormatter

TIMING_LOGGER = "komd.timing"

logger = logging.getLogger(__name__)


class FileUtils:
    """File handling utilities"""

    @staticmethod
    def ensure_directory(path: Union[str, Path]) -> Path:
        """Ensure directory exists"""
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        return path

    @staticmethod
    def safe_write_file(filepath: Union[str, Path], content: str, encoding: str = 'utf-8') -> Path:
        """Write to a temporary file first, then rename"""
        filepath = Path(filepath)
        FileUtils.ensure_directory(filepath.parent)

        temp_file = filepath.with_name(filepath.name + ".tmp")
        with open(temp_file, 'w', encoding=encoding, newline='') as f:
            f.write(content)
        os.replace(temp_file, filepath)
        return filepath

    @staticmethod
    def write_json(data: Any, filepath: Union[str, Path]) -> Path:
        """Deterministic JSON: sorted keys, fixed indentation, trailing newline"""
        content = json.dumps(data, indent=2, sort_keys=True, default=str, ensure_ascii=False)
        return FileUtils.safe_write_file(filepath, content + "\n")

    @staticmethod
    def read_json(filepath: Union[str, Path]) -> Any:
        with open(filepath, 'r', encoding='utf-8') as f:
            return json.load(f)


class HashUtils:
    """Hashing and checksum utilities"""

    @staticmethod
    def generate_content_hash(content: str, algorithm: str = 'sha256') -> str:
        """Generate hash for content"""
        hash_func = getattr(hashlib, algorithm)()
        hash_func.update(content.encode('utf-8'))
        return hash_func.hexdigest()

    @staticmethod
    def sparse_matrix_hash(matrix: sp.spmatrix) -> str:
        """Hash of the nonzero pattern and values of a sparse matrix"""
        csr = sp.csr_matrix(matrix)
        csr.sort_indices()
        hash_func = hashlib.sha256()
        hash_func.update(np.asarray(csr.shape, dtype=np.int64).tobytes())
        hash_func.update(csr.indptr.astype(np.int64).tobytes())
        hash_func.update(csr.indices.astype(np.int64).tobytes())
        hash_func.update(csr.data.astype(np.float64).tobytes())
        return hash_func.hexdigest()


class PerformanceUtils:
    """Performance monitoring utilities"""

    @staticmethod
    def measure_execution_time(func):
        """Decorator logging function execution time at debug level"""
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            result = func(*args, **kwargs)
            execution_time = time.perf_counter() - start_time
            logging.getLogger(func.__module__).debug(
                "%s executed in %.4f seconds", func.__name__, execution_time)
            return result
        return wrapper

    @staticmethod
    def get_memory_usage() -> Dict[str, float]:
        """Get current memory usage"""
        try:
            import psutil
            memory_info = psutil.Process().memory_info()
            return {"rss_mb": round(memory_info.rss / 1024 / 1024, 1)}
        except ImportError:
            return {}


class Stopwatch:
    """Wall-clock timer usable as a context manager"""

    def __init__(self, start: bool = True):
        self._start: Optional[float] = time.perf_counter() if start else None
        self._stop: Optional[float] = None

    def start(self) -> "Stopwatch":
        self._start = time.perf_counter()
        self._stop = None
        return self

    def stop(self) -> float:
        self._stop = time.perf_counter()
        return self.elapsed()

    def elapsed(self) -> float:
        if self._start is None:
            return 0.0
        end = self._stop if self._stop is not None else time.perf_counter()
        return end - self._start

    def __enter__(self) -> "Stopwatch":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def __str__(self) -> str:
        return format_duration(self.elapsed())


class LoggingUtils:
    """Logging utilities"""

    @staticmethod
    def _formatter(log_format: str) -> logging.Formatter:
        if log_format == "json":
            return JsonFormatter('%(asctime)s %(levelname)s %(name)s %(message)s')
        return logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')

    @staticmethod
    def setup_logging(
        log_level: str = "INFO",
        log_file: Optional[str] = None,
        log_format: str = "text"
    ) -> None:
        """Setup application logging"""
        level = getattr(logging, log_level.upper(), logging.INFO)
        formatter = LoggingUtils._formatter(log_format)

        console_handler = logging.StreamHandler()
        console_handler.setFormatter(formatter)
        handlers = [console_handler]

        if log_file:
            FileUtils.ensure_directory(Path(log_file).parent)
            file_handler = logging.FileHandler(log_file)
            file_handler.setFormatter(formatter)
            handlers.append(file_handler)

        logging.basicConfig(level=level, handlers=handlers, force=True)
        logging.captureWarnings(True)


class TimingLog:
    """One JSON object per line for every timed phase"""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.logger = logging.getLogger(TIMING_LOGGER)
        self.logger.setLevel(logging.INFO)
        self.logger.propagate = False
        self.handler: Optional[logging.Handler] = None
        if path is not None:
            FileUtils.ensure_directory(Path(path).parent)
            self.handler = logging.FileHandler(path, mode='a', encoding='utf-8')
            self.handler.setFormatter(JsonFormatter('%(asctime)s %(message)s'))
            self.logger.addHandler(self.handler)

    def log_phase(self, phase: str, seconds: float, **fields: Any) -> None:
        record = {"phase": phase, "seconds": round(seconds, 6)}
        record.update(fields)
        record.update(PerformanceUtils.get_memory_usage())
        self.logger.info(phase, extra=record)
        logger.info("%s took %s", phase, format_duration(seconds))

    def close(self) -> None:
        if self.handler is not None:
            self.logger.removeHandler(self.handler)
            self.handler.close()
            self.handler = None

    def __enter__(self) -> "TimingLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class GramCache:
    """On-disk cache of gram matrices and q-tilde keyed by content hash"""

    def __init__(self, directory: Union[str, Path], enabled: bool = True):
        self.directory = Path(directory)
        self.enabled = enabled

    @staticmethod
    def make_key(matrix_hash: str, spec_key: str) -> str:
        return HashUtils.generate_content_hash(f"{matrix_hash}|{spec_key}")

    def path_for(self, key: str) -> Path:
        return self.directory / f"gram-{key[:32]}.npz"

    def get(self, key: str) -> Optional[Dict[str, np.ndarray]]:
        """Get cached arrays"""
        if not self.enabled:
            return None
        path = self.path_for(key)
        if not path.exists():
            return None
        try:
            with np.load(path, allow_pickle=False) as data:
                arrays = {name: data[name] for name in data.files}
        except (OSError, ValueError) as e:
            logger.warning("ignoring unreadable gram cache %s: %s", path, e)
            return None
        if str(arrays.get("key", "")) != key:
            return None
        logger.info("gram cache hit: %s", path.name)
        return arrays

    def set(self, key: str, arrays: Dict[str, np.ndarray]) -> Optional[Path]:
        """Set cached arrays"""
        if not self.enabled:
            return None
        FileUtils.ensure_directory(self.directory)
        path = self.path_for(key)
        temp = path.with_name(path.stem + ".tmp.npz")
        np.savez_compressed(temp, key=np.array(key), **arrays)
        os.replace(temp, path)
        return path

    def clear(self) -> int:
        """Remove every cache file, returning how many were deleted"""
        if not self.directory.exists():
            return 0
        count = 0
        for path in self.directory.glob("gram-*.npz"):
            path.unlink()
            count += 1
        return count


def format_duration(seconds: float) -> str:
    """Format duration in seconds as human readable string"""
    if seconds < 1:
        return f"{seconds*1000:.0f}ms"
    elif seconds < 60:
        return f"{seconds:.1f}s"
    elif seconds < 3600:
        return f"{seconds/60:.1f}m"
    else:
        return f"{seconds/3600:.1f}h"


__all__ = [
    'FileUtils', 'HashUtils', 'PerformanceUtils', 'Stopwatch', 'LoggingUtils',
    'TimingLog', 'GramCache', 'format_duration', 'TIMING_LOGGER',
]
