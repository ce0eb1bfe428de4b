"""
可热改的默认参数：噪声模型、搜索预算、稠密模拟上限与缓存位置
"""
import os

from dotenv import load_dotenv

load_dotenv()

# ---------- 门保真度参考值 ----------
DEFAULT_FS = float(os.getenv("TDF_FS", "0.999"))
DEFAULT_FT = float(os.getenv("TDF_FT", "0.996"))

# ---------- 振幅阻尼 ----------
# 0.0784 经单光子公式恰好给出 0.98
DEFAULT_GAMMA = float(os.getenv("TDF_GAMMA", "0.0784"))
TABLE2_DAMPING_FACTOR = float(os.getenv("TDF_DAMPING_FACTOR", "0.98"))

# ---------- 搜索预算 ----------
SEARCH_BUDGET = int(os.getenv("TDF_SEARCH_BUDGET", "2000"))
EMBED_BUDGET = int(os.getenv("TDF_EMBED_BUDGET", "200000"))
DEFAULT_SEED = int(os.getenv("TDF_SEED", "0"))

# ---------- 稠密模拟上限 ----------
DENSE_MAX_QUBITS = int(os.getenv("TDF_DENSE_MAX_QUBITS", "12"))
DENSITY_MAX_QUBITS = int(os.getenv("TDF_DENSITY_MAX_QUBITS", "10"))
ORACLE_MAX_QUBITS = int(os.getenv("TDF_ORACLE_MAX_QUBITS", "6"))

# ---------- 数值容差 ----------
NORM_TOL = 1e-12
PSD_TOL = 1e-9
EIG_CLIP = -1e-12

# ---------- 缓存与输出 ----------
CACHE_DB_PATH = os.getenv("CACHE_DB_PATH", ".cache/cache.db")
CACHE_MAX_MEMORY_ITEMS = int(os.getenv("CACHE_MAX_MEMORY_ITEMS", "1000"))
CACHE_CLEANUP_INTERVAL = int(os.getenv("CACHE_CLEANUP_INTERVAL", "3600"))
CACHE_EXPIRE = int(os.getenv("CACHE_EXPIRE", str(30 * 86400)))
OUTPUT_DIR = os.getenv("TDF_OUTPUT_DIR", "output")

# 嵌入与局部搜索算法版本，变更算法时递增以作废旧缓存
EMBED_ALGORITHM_VERSION = "mirror-bt-1"
SEARCH_ALGORITHM_VERSION = "seeded-hc-1"
