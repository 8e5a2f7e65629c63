// SPDX-License-Identifier: GPL-2.0
/*
 * Driver for the ST STV0910 DVB-S/S2 demodulator, reduced.
 */

#include <linux/kernel.h>
#include <linux/i2c.h>

struct slookup {
	s16 value;
	u32 reg_value;
};

/* C/N lookup for DVB-S2, dB * 10 against register value */
static const struct slookup s2_sn_lookup[] = {
	{ -30, 13000},
	{ -25, 12977},
	{ -20, 12954},
	{ -15, 12931},
	{ -10, 12908},
	{  -5, 12885},
	{   0, 12862},
	{   5, 12839},
	{  10, 12816},
	{  15, 12793},
	{  20, 12770},
	{  25, 12747},
	{  30, 12724},
	{  35, 12701},
	{  40, 12678},
	{  45, 12655},
	{  50, 12632},
	{  55, 12609},
	{  60, 12586},
	{  65, 12563},
	{  70, 12540},
	{  75, 12517},
	{  80, 12494},
	{  85, 12471},
	{  90, 12448},
	{  95, 12425},
	{ 100, 12402},
	{ 105, 12379},
	{ 110, 12356},
	{ 115, 12333},
	{ 120, 12310},
	{ 125, 12287},
	{ 130, 12264},
	{ 135, 12241},
	{ 140, 12218},
	{ 145, 12195},
	{ 150, 12172},
	{ 155, 12149},
	{ 160, 12126},
	{ 165, 12103},
	{ 170, 12080},
	{ 175, 12057},
	{ 180, 12034},
	{ 185, 12011},
	{ 190, 11988},
	{ 195, 11965},
	{ 200, 11942},
	{ 205, 11919},
	{ 210, 11896},
	{ 215, 11873},
	{ 220, 11850},
	{ 225, 11827},
	{ 230, 11804},
	{ 235, 11781},
	{ 240, 11758},
	{ 245, 11735},
	{ 250, 11712},
	{ 255, 11689},
	{ 260, 11666},
	{ 265, 11643},
	{ 270, 11620},
	{ 275, 11597},
	{ 280, 11574},
	{ 285, 11551},
	{ 290, 11528},
	{ 295, 11505},
	{ 300, 11482},
	{ 305, 11459},
	{ 310, 11436},
	{ 315, 11413},
	{ 320, 11390},
	{ 325, 11367},
	{ 330, 11344},
	{ 335, 11321},
	{ 340, 11298},
	{ 345, 11275},
	{ 350, 11252},
	{ 355, 11229},
	{ 360, 11206},
	{ 365, 11183},
	{ 370, 11160},
	{ 375, 11137},
	{ 380, 11114},
	{ 385, 11091},
	{ 390, 11068},
	{ 395, 11045},
	{ 400, 11022},
	{ 405, 10999},
	{ 410, 10976},
	{ 415, 10953},
	{ 420, 10930},
	{ 425, 10907},
	{ 430, 10884},
	{ 435, 10861},
	{ 440, 10838},
	{ 445, 10815},
	{ 450, 10792},
	{ 455, 10769},
	{ 460, 10746},
	{ 465, 10723},
	{ 470, 10700},
	{ 475, 10677},
	{ 480, 10654},
	{ 485, 10631},
	{ 490, 10608},
	{ 495, 10585},
	{ 500, 10562},
	{ 505, 10539},
	{ 510, 10516},
	{ 515, 10493},
	{ 520, 10470},
	{ 525, 10447},
	{ 530, 10424},
	{ 535, 10401},
	{ 540, 10378},
	{ 545, 10355},
	{ 550, 10332},
	{ 555, 10309},
	{ 560, 10286},
	{ 565, 10263},
	{ 570, 10240},
	{ 575, 10217},
	{ 580, 10194},
	{ 585, 10171},
	{ 590, 10148},
	{ 595, 10125},
	{ 600, 10102},
	{ 605, 10079},
	{ 610, 10056},
	{ 615, 10033},
	{ 620, 10010},
	{ 625,  9987},
	{ 630,  9964},
	{ 635,  9941},
	{ 640,  9918},
	{ 645,  9895},
	{ 650,  9872},
	{ 655,  9849},
	{ 660,  9826},
	{ 665,  9803},
	{ 670,  9780},
	{ 675,  9757},
	{ 680,  9734},
	{ 685,  9711},
	{ 690,  9688},
	{ 695,  9665},
	{ 700,  9642},
	{ 705,  9619},
	{ 710,  9596},
	{ 715,  9573},
	{ 720,  9550},
	{ 725,  9527},
	{ 730,  9504},
	{ 735,  9481},
	{ 740,  9458},
	{ 745,  9435},
	{ 750,  9412},
	{ 755,  9389},
	{ 760,  9366},
	{ 765,  9343},
	{ 770,  9320},
	{ 775,  9297},
	{ 780,  9274},
	{ 785,  9251},
	{ 790,  9228},
	{ 795,  9205},
	{ 800,  9182},
	{ 805,  9159},
	{ 810,  9136},
	{ 815,  9113},
	{ 820,  9090},
	{ 825,  9067},
	{ 830,  9044},
	{ 835,  9021},
	{ 840,  8998},
	{ 845,  8975},
	{ 850,  8952},
	{ 855,  8929},
	{ 860,  8906},
	{ 865,  8883},
	{ 870,  8860},
	{ 875,  8837},
	{ 880,  8814},
	{ 885,  8791},
	{ 890,  8768},
	{ 895,  8745},
	{ 900,  8722},
	{ 905,  8699},
	{ 910,  8676},
	{ 915,  8653},
	{ 920,  8630},
	{ 925,  8607},
	{ 930,  8584},
	{ 935,  8561},
	{ 940,  8538},
	{ 945,  8515},
	{ 950,  8492},
	{ 955,  8469},
	{ 960,  8446},
	{ 965,  8423},
	{ 970,  8400},
	{ 975,  8377},
	{ 980,  8354},
	{ 985,  8331},
	{ 990,  8308},
	{ 995,  8285},
	{1000,  8262},
	{1005,  8239},
	{1010,  8216},
	{1015,  8193},
	{1020,  8170},
	{1025,  8147},
	{1030,  8124},
	{1035,  8101},
	{1040,  8078},
	{1045,  8055},
	{1050,  8032},
	{1055,  8009},
	{1060,  7986},
	{1065,  7963},
	{1070,  7940},
	{1075,  7917},
	{1080,  7894},
	{1085,  7871},
	{1090,  7848},
	{1095,  7825},
	{1100,  7802},
	{1105,  7779},
	{1110,  7756},
	{1115,  7733},
	{1120,  7710},
	{1125,  7687},
	{1130,  7664},
	{1135,  7641},
	{1140,  7618},
	{1145,  7595},
	{1150,  7572},
	{1155,  7549},
	{1160,  7526},
	{1165,  7503},
	{1170,  7480},
	{1175,  7457},
	{1180,  7434},
	{1185,  7411},
	{1190,  7388},
	{1195,  7365},
	{1200,  7342},
	{1205,  7319},
	{1210,  7296},
	{1215,  7273},
	{1220,  7250},
	{1225,  7227},
	{1230,  7204},
	{1235,  7181},
	{1240,  7158},
	{1245,  7135},
	{1250,  7112},
	{1255,  7089},
	{1260,  7066},
	{1265,  7043},
	{1270,  7020},
	{1275,  6997},
	{1280,  6974},
	{1285,  6951},
	{1290,  6928},
	{1295,  6905},
	{1300,  6882},
	{1305,  6859},
	{1310,  6836},
	{1315,  6813},
	{1320,  6790},
	{1325,  6767},
	{1330,  6744},
	{1335,  6721},
	{1340,  6698},
	{1345,  6675},
	{1350,  6652},
	{1355,  6629},
	{1360,  6606},
	{1365,  6583},
	{1370,  6560},
	{1375,  6537},
	{1380,  6514},
	{1385,  6491},
	{1390,  6468},
	{1395,  6445},
	{1400,  6422},
	{1405,  6399},
	{1410,  6376},
	{1415,  6353},
	{1420,  6330},
	{1425,  6307},
	{1430,  6284},
	{1435,  6261},
	{1440,  6238},
	{1445,  6215},
	{1450,  6192},
	{1455,  6169},
	{1460,  6146},
	{1465,  6123},
	{1470,  6100},
	{1475,  6077},
	{1480,  6054},
	{1485,  6031},
	{1490,  6008},
	{1495,  5985},
	{1500,  5962},
	{1505,  5939},
	{1510,  5916},
	{1515,  5893},
	{1520,  5870},
	{1525,  5847},
	{1530,  5824},
	{1535,  5801},
	{1540,  5778},
	{1545,  5755},
	{1550,  5732},
	{1555,  5709},
	{1560,  5686},
	{1565,  5663},
	{1570,  5640},
	{1575,  5617},
	{1580,  5594},
	{1585,  5571},
	{1590,  5548},
	{1595,  5525},
	{1600,  5502},
	{1605,  5479},
	{1610,  5456},
	{1615,  5433},
	{1620,  5410},
	{1625,  5387},
	{1630,  5364},
	{1635,  5341},
	{1640,  5318},
	{1645,  5295},
	{1650,  5272},
	{1655,  5249},
	{1660,  5226},
	{1665,  5203},
	{1670,  5180},
	{1675,  5157},
	{1680,  5134},
	{1685,  5111},
	{1690,  5088},
	{1695,  5065},
	{1700,  5042},
	{1705,  5019},
	{1710,  4996},
	{1715,  4973},
	{1720,  4950},
	{1725,  4927},
	{1730,  4904},
	{1735,  4881},
	{1740,  4858},
	{1745,  4835},
	{1750,  4812},
	{1755,  4789},
	{1760,  4766},
	{1765,  4743},
	{1770,  4720},
	{1775,  4697},
	{1780,  4674},
	{1785,  4651},
	{1790,  4628},
	{1795,  4605},
	{1800,  4582},
	{1805,  4559},
	{1810,  4536},
	{1815,  4513},
	{1820,  4490},
	{1825,  4467},
	{1830,  4444},
	{1835,  4421},
	{1840,  4398},
	{1845,  4375},
	{1850,  4352},
	{1855,  4329},
	{1860,  4306},
	{1865,  4283},
	{1870,  4260},
	{1875,  4237},
	{1880,  4214},
	{1885,  4191},
	{1890,  4168},
	{1895,  4145},
	{1900,  4122},
	{1905,  4099},
	{1910,  4076},
	{1915,  4053},
	{1920,  4030},
	{1925,  4007},
	{1930,  3984},
	{1935,  3961},
	{1940,  3938},
	{1945,  3915},
	{1950,  3892},
	{1955,  3869},
	{1960,  3846},
	{1965,  3823},
	{1970,  3800},
	{1975,  3777},
	{1980,  3754},
	{1985,  3731},
	{1990,  3708},
	{1995,  3685},
	{2000,  3662},
	{2005,  3639},
	{2010,  3616},
	{2015,  3593},
	{2020,  3570},
	{2025,  3547},
	{2030,  3524},
	{2035,  3501},
	{2040,  3478},
	{2045,  3455},
	{2050,  3432},
};

static int write_reg(struct stv *state, u16 reg, u8 val)
{
	struct i2c_adapter *adap = state->base->i2c;
	u8 data[3] = {reg >> 8, reg & 0xff, val};
	struct i2c_msg msg = {.addr = state->base->adr, .flags = 0,
			      .buf = data, .len = 3};

	if (i2c_transfer(adap, &msg, 1) != 1) {
		dev_warn(&adap->dev, "i2c write error ([%02x] %04x: %02x)\n",
			 state->base->adr, reg, val);
		return -EIO;
	}
	return 0;
}

static int i2c_read_regs16(struct i2c_adapter *adapter, u8 adr,
			   u16 reg, u8 *val, int count)
{
	u8 msg[2] = {reg >> 8, reg & 0xff};
	struct i2c_msg msgs[2] = {{.addr = adr, .flags = 0,
				   .buf  = msg, .len   = 2},
				  {.addr = adr, .flags = I2C_M_RD,
				   .buf  = val, .len   = count } };

	if (i2c_transfer(adapter, msgs, 2) != 2) {
		dev_warn(&adapter->dev, "i2c read error ([%02x] %04x)\n",
			 adr, reg);
		return -EIO;
	}
	return 0;
}

static int read_reg(struct stv *state, u16 reg, u8 *val)
{
	return i2c_read_regs16(state->base->i2c, state->base->adr,
			       reg, val, 1);
}

static int read_regs(struct stv *state, u16 reg, u8 *val, int len)
{
	return i2c_read_regs16(state->base->i2c, state->base->adr,
			       reg, val, len);
}

static int get_cur_symbol_rate(struct stv *state, u32 *p_symbol_rate)
{
	u8 symb_freq0, symb_freq1, symb_freq2, symb_freq3;
	u32 symbol_rate;

	read_reg(state, RSTV0910_P2_SFR3 + state->regoff, &symb_freq3);
	read_reg(state, RSTV0910_P2_SFR2 + state->regoff, &symb_freq2);
	read_reg(state, RSTV0910_P2_SFR1 + state->regoff, &symb_freq1);
	read_reg(state, RSTV0910_P2_SFR0 + state->regoff, &symb_freq0);

	symbol_rate = ((u32)symb_freq3 << 24) | ((u32)symb_freq2 << 16) |
		      ((u32)symb_freq1 << 8) | (u32)symb_freq0;
	*p_symbol_rate = symbol_rate;
	return 0;
}

static int get_signal_parameters(struct stv *state)
{
	u8 tmp;

	if (!state->started)
		return -EINVAL;

	if (state->receive_mode == RCVMODE_DVBS2) {
		read_reg(state, RSTV0910_P2_DMDMODCOD + state->regoff, &tmp);
		state->mod_cod = (enum fe_stv0910_mod_cod)((tmp & 0x7c) >> 2);
		state->pilots = (tmp & 0x01) != 0;
		state->fectype = (enum dvbs2_fectype)((tmp & 0x02) >> 1);

	} else if (state->receive_mode == RCVMODE_DVBS) {
		read_reg(state, RSTV0910_P2_VITCURPUN + state->regoff, &tmp);
		state->puncture_rate = FEC_NONE;
		switch (tmp & 0x1F) {
		case 0x0d:
			state->puncture_rate = FEC_1_2;
			break;
		case 0x12:
			state->puncture_rate = FEC_2_3;
			break;
		}
		state->is_vcm = 0;
		state->is_standard_broadcast = 1;
		state->feroll_off = FE_SAT_35;
	}
	return 0;
}

static int tracking_optimization(struct stv *state)
{
	u8 tmp;

	read_reg(state, RSTV0910_P2_DMDCFGMD + state->regoff, &tmp);
	tmp &= ~0xC0;

	switch (state->receive_mode) {
	case RCVMODE_DVBS:
		tmp |= 0x40;
		break;
	case RCVMODE_DVBS2:
		tmp |= 0x80;
		break;
	default:
		tmp |= 0xC0;
		break;
	}
	write_reg(state, RSTV0910_P2_DMDCFGMD + state->regoff, tmp);
	return 0;
}
