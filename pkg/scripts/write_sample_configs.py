"""
生成 configs/ 下的示例实验配置
"""
import sys
import os

# 添加项目根目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.schemas.experiment import parse_config_text

# 每个配置只写与默认值不同的键
SAMPLES = {
    "convergence_pe0p1": ("convergence", {"run.name": "convergence_pe0p1", "adr.velocity": "0.1"}),
    "convergence_pe1": ("convergence", {"run.name": "convergence_pe1", "adr.velocity": "1.0"}),
    "convergence_r0p1": ("convergence", {"run.name": "convergence_r0p1", "adr.b": "0.1"}),
    "convergence_r0p9": ("convergence", {"run.name": "convergence_r0p9", "adr.b": "0.9"}),
    "convergence_gaussian": ("convergence", {
        "run.name": "convergence_gaussian", "adr.profile": "gaussian", "adr.velocity": "1.0",
    }),
    "pauli": ("pauli", {"run.name": "pauli", "pauli.sites": "2, 3, 4, 5, 6", "pauli.order": "3"}),
    "p0scan_n100": ("p0scan", {"run.name": "p0scan_n100", "p0.n_sites": "100", "p0.gamma_re": "0.01"}),
    "p0scan_n8": ("p0scan", {"run.name": "p0scan_n8", "p0.n_sites": "8", "p0.simulate": "true"}),
    "beverify": ("beverify", {"run.name": "beverify", "run.seed": "20240101"}),
}


def render(command: str, entries: dict) -> str:
    lines = [f"# 子命令：{command}", "# 未列出的键取默认值"]
    lines.extend(f"{key} = {value}" for key, value in entries.items())
    return "\n".join(lines) + "\n"


def main(target: str = "configs") -> None:
    os.makedirs(target, exist_ok=True)
    for name, (command, entries) in SAMPLES.items():
        text = render(command, entries)
        # 写出前先校验
        parse_config_text(text, source=name)
        path = os.path.join(target, f"{name}.conf")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        print(f"已写出 {path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "configs")
