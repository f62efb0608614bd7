"""
对 configs/*.conf 依次运行对应子命令
"""
import sys
import os
import glob

# 添加项目根目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.config import settings
from app.main import main as cli_main

COMMANDS = ("convergence", "pauli", "p0scan", "beverify")


def command_for(path: str) -> str:
    """配置文件名以子命令开头，例如 convergence_pe1.conf"""
    stem = os.path.splitext(os.path.basename(path))[0]
    for command in COMMANDS:
        if stem == command or stem.startswith(command + "_"):
            return command
    raise SystemExit(f"无法从文件名推断子命令：{path}")


def main(config_dir: str = "configs") -> int:
    status = 0
    for path in sorted(glob.glob(os.path.join(config_dir, "*.conf"))):
        command = command_for(path)
        stem = os.path.splitext(os.path.basename(path))[0]
        out_dir = os.path.join(settings.output_dir, stem)
        print(f"运行 {command}：{path} → {out_dir}")
        code = cli_main([command, "--config", path, "--out", out_dir])
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main(sys.argv[1] if len(sys.argv) > 1 else "configs"))
