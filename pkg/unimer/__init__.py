"""微表情运动依据解释数据集构建工具"""

__version__ = "0.1.0"

# 所有对外文件格式的版本号（--version 输出）
SCHEMA_VERSIONS = {
    "landmarks": "1",
    "flow": "flo-202021.25",
    "manifest": "1",
    "record": "1",
    "summary": "1",
    "run_manifest": "1",
    "config": "1",
    "predictions": "1",
    "metric_report": "1",
    "stats": "1",
}
