//! Shared in-crate test fixtures: the 10- and 11-component reference
//! mixtures whose order-8 score-matching coefficients and Jeffreys values
//! are frozen as regression targets across modules.

use crate::gmm::{GaussianComponent, Gmm};

pub(crate) const M1_W: [f64; 10] = [
    0.07364108534346539,
    0.025167076634769497,
    0.1658464442557156,
    0.08185153079585956,
    0.17161510648315073,
    0.15953446622685713,
    0.022842151933409417,
    0.049191546964925566,
    0.14754497221852986,
    0.10276561914331742,
];
pub(crate) const M1_MU: [f64; 10] = [
    -6.870065732622028,
    -6.075048963602256,
    -1.8146313935909912,
    -5.591128666334971,
    -1.1973521037847608,
    -9.310935699350253,
    -3.0593318855130107,
    -4.852351219823438,
    -1.490305752594482,
    -6.216141690955186,
];
pub(crate) const M1_SIGMA: [f64; 10] = [
    1.986271783650286,
    1.2597407019915596,
    1.8628859064709857,
    1.7384764507778412,
    1.7318449234046134,
    1.254801266749996,
    1.974864532982311,
    1.744469053647133,
    1.7981113425253326,
    1.362441455807411,
];
pub(crate) const M2_W: [f64; 11] = [
    0.12358972060770726,
    0.02339461891279208,
    0.1506011549593897,
    0.09285155681935832,
    0.10451002535239201,
    0.10052770665958442,
    0.01373064574217043,
    0.10580776225290722,
    0.12295512911537661,
    0.12967771116575466,
    0.0323539684125673,
];
pub(crate) const M2_MU: [f64; 11] = [
    -3.6623895510043063,
    -4.708573306071039,
    -5.892552442132609,
    -3.429016176798921,
    -1.7627902228669008,
    -7.640209485581262,
    -1.4307574402150962,
    -9.596750562831444,
    -4.567720102904078,
    -3.513053589366777,
    -7.980336695494762,
];
pub(crate) const M2_SIGMA: [f64; 11] = [
    1.8960669673645039,
    1.4988324123813517,
    1.5544383179469747,
    1.56860496582525,
    1.469765667169659,
    1.4161278888109865,
    1.9053029200511382,
    1.4463019439513571,
    1.2600844956599735,
    1.9316475019357529,
    1.9908903800330418,
];

pub(crate) fn mixture(w: &[f64], mu: &[f64], sigma: &[f64]) -> Gmm {
    let components = mu
        .iter()
        .zip(sigma)
        .map(|(&m, &s)| GaussianComponent::new(m, s).unwrap())
        .collect();
    Gmm::new_normalizing(w.to_vec(), components).unwrap().0
}

pub(crate) fn m1() -> Gmm {
    mixture(&M1_W, &M1_MU, &M1_SIGMA)
}

pub(crate) fn m2() -> Gmm {
    mixture(&M2_W, &M2_MU, &M2_SIGMA)
}
