//! GUE Tracy-Widom distribution function `F2(x)` on the grid `-5.0, -4.9, ..., 3.0`.
//!
//! Values come from the Airy-kernel Fredholm determinant `det(I - K_Ai)` on
//! `L^2(x, inf)`, discretised with 96-point Gauss-Legendre quadrature on
//! `[x, x + 18]`; `scripts/tw_gue_table.py` regenerates them.

pub(crate) const TW_GUE_TABLE: [(f64, f64); 81] = [
    (-5.0, 2.135996984741e-05),
    (-4.9, 3.951393997419e-05),
    (-4.8, 7.133185394410e-05),
    (-4.7, 1.257240596795e-04),
    (-4.6, 2.164578317340e-04),
    (-4.5, 3.642223896787e-04),
    (-4.4, 5.992622323809e-04),
    (-4.3, 9.645899310691e-04),
    (-4.2, 1.519717369597e-03),
    (-4.1, 2.344747559159e-03),
    (-4.0, 3.544553595509e-03),
    (-3.9, 5.252649107902e-03),
    (-3.8, 7.634243438767e-03),
    (-3.7, 1.088789657734e-02),
    (-3.6, 1.524516621201e-02),
    (-3.5, 2.096769149277e-02),
    (-3.4, 2.834129663698e-02),
    (-3.3, 3.766692195624e-02),
    (-3.2, 4.924848566005e-02),
    (-3.1, 6.337811827999e-02),
    (-3.0, 8.031955293933e-02),
    (-2.9, 1.002907533273e-01),
    (-2.8, 1.234470726846e-01),
    (-2.7, 1.498663255466e-01),
    (-2.6, 1.795370985848e-01),
    (-2.5, 2.123514258196e-01),
    (-2.4, 2.481026248697e-01),
    (-2.3, 2.864886703727e-01),
    (-2.2, 3.271210161031e-01),
    (-2.1, 3.695383215812e-01),
    (-2.0, 4.132241425051e-01),
    (-1.9, 4.576273481374e-01),
    (-1.8, 5.021838594450e-01),
    (-1.7, 5.463382690886e-01),
    (-1.6, 5.895640014109e-01),
    (-1.5, 6.313808764207e-01),
    (-1.4, 6.713692255423e-01),
    (-1.3, 7.091800328138e-01),
    (-1.2, 7.445409075332e-01),
    (-1.1, 7.772580015332e-01),
    (-1.0, 8.072142419993e-01),
    (-0.9, 8.343644434632e-01),
    (-0.8, 8.587279837440e-01),
    (-0.7, 8.803797796479e-01),
    (-0.6, 8.994402870756e-01),
    (-0.5, 9.160651890093e-01),
    (-0.4, 9.304353380406e-01),
    (-0.3, 9.427474023257e-01),
    (-0.2, 9.532055385382e-01),
    (-0.1, 9.620142937272e-01),
    (0.0, 9.693728283553e-01),
    (0.1, 9.754704606595e-01),
    (0.2, 9.804834605909e-01),
    (0.3, 9.845729703982e-01),
    (0.4, 9.878838971247e-01),
    (0.5, 9.905446073837e-01),
    (0.6, 9.926672536080e-01),
    (0.7, 9.943485701351e-01),
    (0.8, 9.956709937410e-01),
    (0.9, 9.967039836440e-01),
    (1.0, 9.975054381494e-01),
    (1.1, 9.981231271213e-01),
    (1.2, 9.985960799991e-01),
    (1.3, 9.989558872718e-01),
    (1.4, 9.992278887317e-01),
    (1.5, 9.994322343112e-01),
    (1.6, 9.995848129832e-01),
    (1.7, 9.996980523145e-01),
    (1.8, 9.997815961641e-01),
    (1.9, 9.998428710957e-01),
    (2.0, 9.998875536983e-01),
    (2.1, 9.999199515499e-01),
    (2.2, 9.999433103070e-01),
    (2.3, 9.999600586371e-01),
    (2.4, 9.999720016244e-01),
    (2.5, 9.999804720351e-01),
    (2.6, 9.999864475507e-01),
    (2.7, 9.999906408337e-01),
    (2.8, 9.999935681412e-01),
    (2.9, 9.999956011750e-01),
    (3.0, 9.999970059566e-01),
];
