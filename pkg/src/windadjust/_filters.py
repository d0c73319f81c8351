"""Embedded lowpass decomposition filters.

Highpass filters are derived from these via the quadrature mirror relation,
see :mod:`windadjust.wavelets`.
"""

# Least-asymmetric Daubechies, 8 vanishing moments (16 taps).
SYM8_LO = (
    -0.0033824159510061256,
    -0.0005421323317911481,
    0.03169508781149298,
    0.007607487324917605,
    -0.1432942383508097,
    -0.061273359067658524,
    0.4813596512583722,
    0.7771857517005235,
    0.3644418948353314,
    -0.05194583810770904,
    -0.027219029917056003,
    0.049137179673607506,
    0.003808752013890615,
    -0.01495225833704823,
    -0.0003029205147213668,
    0.0018899503327594609,
)

# 62-tap orthonormal approximation of the Meyer scaling filter.
# Generated by tools/make_dmey.py.
DMEY_LO = (
    2.792641517820223e-07,
    -1.3060004537378912e-06,
    -1.4275363317177016e-05,
    6.908115226965562e-05,
    -4.3695711258376605e-05,
    8.50401189490886e-05,
    -7.655929781853483e-05,
    2.564213111673995e-05,
    -9.749407625268843e-05,
    2.055551678916314e-05,
    0.00013057565395750522,
    -0.00014043237833171046,
    -0.00015364503834523543,
    2.2657081584732497e-05,
    0.0005856883209143799,
    0.0005198153749778305,
    -0.002056482464875193,
    -0.0012685358208775945,
    0.005605123158365626,
    0.001509543468111889,
    -0.01253279107848806,
    -4.6599664455380825e-05,
    0.024244703107133527,
    -0.005473021648496716,
    -0.042972703664905444,
    0.019589553782751887,
    0.07412287226830862,
    -0.054306189525954056,
    -0.14109803097001342,
    0.18055092286383986,
    0.660306288425785,
    0.6603049900876405,
    0.18055210564096738,
    -0.1410985563082111,
    -0.054304244369061554,
    0.07411724445887834,
    0.019596646324235842,
    -0.043015099560340324,
    -0.00544982551132065,
    0.024154955774945988,
    5.854710197516827e-06,
    -0.012588938438487875,
    0.0015836623300195414,
    0.00564524669373267,
    -0.0012286390943281275,
    -0.0020264696669756005,
    0.0004798274937228589,
    0.0005887026136442483,
    -2.736863483985033e-05,
    -0.00021274649402035862,
    -0.0001075506053620435,
    0.0001064738497356808,
    5.4084651049389515e-05,
    -1.202132351759105e-06,
    3.202419881937652e-05,
    -1.006715247509737e-05,
    -2.166741394282684e-06,
    -1.0140614046822722e-05,
    -3.152861095305774e-05,
    -5.203725894383332e-06,
    4.046871452846007e-06,
    8.653489517561199e-07,
)
