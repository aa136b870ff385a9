"""
例外定義
三角形分割・デコレーション・状態和計算で送出される例外
"""


class QHIError(Exception):
    """基底例外クラス"""


# 三角形分割
class UnpairedFace(QHIError):
    """貼り合わせのない面"""


class InconsistentVertexMap(QHIError):
    """頂点対応が全単射でない"""


class NonOrientable(QHIError):
    """向き付け不可能"""


# デコレーション
class CoherentFace(QHIError):
    """境界が巡回的に向き付けられた面"""


class NoTotalOrder(QHIError):
    """辺の向きが全順序を定めない"""


class InvalidDecoration(QHIError):
    """大域条件を満たさないデコレーション"""


class NotFull(QHIError):
    """x(e) = 0 の辺を含む"""


# 移動
class NonBrancheable(QHIError):
    """分岐付き移動が存在しない"""


class FullnessLost(QHIError):
    """移動後のコサイクルがフルでない"""


class NotAdjacent(QHIError):
    """指定面で貼り合わされていない"""


class BadValence(QHIError):
    """辺の価数が3でない"""


class NoValidCharge(QHIError):
    """整数チャージの拡張が存在しない"""


# イデアル四面体
class DegenerateModulus(QHIError):
    """モジュラスが 0 または 1"""


class DegenerateModuli(DegenerateModulus):
    """イデアル移動の障害 (x = y)"""


class NoSolution(QHIError):
    """整数線形系が解をもたない"""


# 量子層・状態和
class EvenN(QHIError):
    """N が偶数"""


class PoleHit(QHIError):
    """巡回二重対数の極"""


class ConstraintViolated(QHIError):
    """x^N + y^N = z^N が成り立たない"""


class FormulaDomain(QHIError):
    """6j テンソルの定義域外"""


class BudgetExceeded(QHIError):
    """縮約のメモリ見積もりが上限を超過"""


class StateSumOverflow(QHIError):
    """倍精度範囲外"""


class MultiplicityMismatch(QHIError):
    """拡張 D 四面体の重複度が貼り合わせと整合しない"""


# 漸近解析
class PhaseUnwrapFailure(QHIError):
    """N 方向の位相接続が曖昧"""


# 入出力
class FileFormatError(QHIError):
    """入力ファイルの形式エラー"""
